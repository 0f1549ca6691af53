/**
 * @file montecarlo.hpp
 * Synthetic data generation and replication studies for the sampling
 * behaviour of the trimmed estimator (consistency and normal limit).
 *
 * Every replication owns its streams: data from (seed, replication key) and
 * solver starts from a seed derived from the same key, so the result does
 * not depend on the number of worker threads.
 */
#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "lts/error.hpp"
#include "lts/model.hpp"
#include "lts/numeric.hpp"
#include "lts/parallel.hpp"
#include "lts/population.hpp"
#include "lts/solver.hpp"

namespace lts {

struct SphericalDesign {};

/// Carriers x ~ N(0, Sigma), Sigma of size (p-1) x (p-1).
struct EllipticalDesign {
  Matrix sigma;
};

using Design = std::variant<SphericalDesign, EllipticalDesign>;

struct NoContamination {};

/// Response shifted by +magnitude.
struct VerticalOutliers {
  double eps = 0.0;
  double magnitude = 0.0;
};

/// Carriers moved to magnitude * (1, ..., 1) with response shifted by +magnitude.
struct LeverageOutliers {
  double eps = 0.0;
  double magnitude = 0.0;
};

/// Rows replaced by the fixed point z = (s', t)'.
struct PointMass {
  double eps = 0.0;
  Vector z;
};

using Contamination = std::variant<NoContamination, VerticalOutliers, LeverageOutliers, PointMass>;

struct GenSpec {
  Index n = 100;
  Index p = 2;
  Vector beta0;
  double sigma = 1.0;
  Design design = SphericalDesign{};
  Contamination contamination = NoContamination{};
};

inline double contamination_eps(const Contamination& c) {
  return std::visit(
      [](const auto& v) -> double {
        if constexpr (requires { v.eps; }) return v.eps; else return 0.0;
      },
      c);
}

inline std::string design_name(const Design& d) {
  return std::holds_alternative<SphericalDesign>(d) ? "spherical-gaussian" : "elliptical";
}

inline std::string contamination_name(const Contamination& c) {
  switch (c.index()) {
    case 1: return "vertical";
    case 2: return "leverage";
    case 3: return "pointmass";
    default: return "none";
  }
}

/// y_i = w_i' beta0 + e_i, e_i ~ N(0, sigma^2) independent of x_i; the first
/// floor(eps n) rows are then contaminated.
inline Dataset generate(const GenSpec& spec, RandomStream& stream) {
  const Index n = spec.n;
  const Index p = spec.p;
  if (p < 1 || n < 1) fail(ErrorCode::DomainError, "generate: n and p must be positive");
  if (spec.beta0.size() != p) fail(ErrorCode::DimensionMismatch, "generate: beta0 must have p entries");
  if (!(spec.sigma > 0.0)) fail(ErrorCode::DomainError, "generate: sigma must be > 0");
  const double eps = contamination_eps(spec.contamination);
  if (!(eps >= 0.0 && eps < 0.5)) fail(ErrorCode::DomainError, "generate: contamination eps must lie in [0, 0.5)");

  std::optional<Matrix> chol;
  if (const auto* ell = std::get_if<EllipticalDesign>(&spec.design)) {
    if (ell->sigma.rows() != p - 1 || ell->sigma.cols() != p - 1) {
      fail(ErrorCode::DimensionMismatch, "generate: Sigma must be (p-1) x (p-1)");
    }
    if (!ell->sigma.isApprox(ell->sigma.transpose())) fail(ErrorCode::DomainError, "generate: Sigma not symmetric");
    chol = Cholesky(ell->sigma).factor();
  }

  DesignMatrix w(n, p);
  Vector y(n);
  for (Index i = 0; i < n; ++i) {
    Vector x = stream.normal_vector(p - 1);
    if (chol) x = (*chol) * x;
    w(i, 0) = 1.0;
    w.row(i).tail(p - 1) = x.transpose();
    y(i) = w.row(i).dot(spec.beta0) + spec.sigma * stream.normal();
  }

  const Index k = static_cast<Index>(std::floor(eps * static_cast<double>(n) + 1e-9));
  std::visit(
      [&](const auto& c) {
        using T = std::decay_t<decltype(c)>;
        for (Index i = 0; i < k; ++i) {
          if constexpr (std::is_same_v<T, VerticalOutliers>) {
            y(i) += c.magnitude;
          } else if constexpr (std::is_same_v<T, LeverageOutliers>) {
            w.row(i).tail(p - 1).setConstant(c.magnitude);
            y(i) = w.row(i).dot(spec.beta0) + c.magnitude;
          } else if constexpr (std::is_same_v<T, PointMass>) {
            if (c.z.size() != p) fail(ErrorCode::DimensionMismatch, "generate: point mass z must be (s', t)'");
            w.row(i).tail(p - 1) = c.z.head(p - 1).transpose();
            y(i) = c.z(p - 1);
          }
        }
      },
      spec.contamination);
  return Dataset(std::move(y), std::move(w));
}

struct StudyRecord {
  Index n = 0;
  int rep = 0;
  Vector beta;
  double objective = 0.0;
  int iterations = 0;
  double error_norm = 0.0;  // ||beta_hat - beta0||
};

struct ConsistencySummary {
  std::vector<Index> n_grid;
  std::vector<double> median_error;
  bool decreasing = false;
};

struct NormalitySummary {
  Index n = 0;
  Vector mean;       // of sqrt(n) (beta_hat - beta0)
  Matrix covariance;  // empirical, divisor reps - 1
  double max_abs_offdiag = 0.0;
  Vector skewness;
  Vector anderson_darling;  // A^2 with the (1 + 0.75/r + 2.25/r^2) small-sample factor
  double ad_critical_1pct = 1.092;
  std::vector<bool> ad_pass;
  AsymptoticConstants constants;  // formula covariance = cov_factor * I, reported only
  std::optional<Matrix> rate_ratio;  // Cov(n) / Cov(4n), entrywise
  std::optional<Matrix> covariance_4n;
};

struct StudyResult {
  std::string kind;
  GenSpec spec;
  double alpha = 0.75;
  int reps = 0;
  std::uint64_t seed = 0;
  SolverConfig solver;
  std::vector<StudyRecord> records;
  std::optional<ConsistencySummary> consistency;
  std::optional<NormalitySummary> normality;
  double elapsed_seconds = 0.0;
};

namespace detail {

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  return 0.5 * (upper + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
}

inline std::vector<StudyRecord> replicate(const GenSpec& tmpl, const std::vector<Index>& n_grid, int reps,
                                          double alpha, const SolverConfig& solver, std::uint64_t seed) {
  const std::size_t total = n_grid.size() * static_cast<std::size_t>(reps);
  std::vector<StudyRecord> records(total);
  SolverConfig inner = solver;
  inner.threads = 1;
  parallel_for(total, solver.threads, [&](std::size_t k) {
    const std::size_t g = k / static_cast<std::size_t>(reps);
    const int rep = static_cast<int>(k % static_cast<std::size_t>(reps));
    GenSpec spec = tmpl;
    spec.n = n_grid[g];
    RandomStream stream = make_stream(seed, (static_cast<std::uint64_t>(g) << 32) | static_cast<std::uint64_t>(rep));
    const Dataset data = generate(spec, stream);
    const TrimSpec trim = TrimSpec::make(alpha, spec.n);
    SolverConfig cfg = inner;
    cfg.seed = derive_seed(seed, g, static_cast<std::uint64_t>(rep));
    const LtsFit f = fit(data, trim, cfg);
    records[k] = StudyRecord{spec.n, rep, f.beta, f.objective_value, f.iterations, (f.beta - spec.beta0).norm()};
  });
  return records;
}

inline double sample_skewness(const Eigen::Ref<const Vector>& x) {
  const double mean = x.mean();
  const Vector d = x.array() - mean;
  const double m2 = d.array().square().mean();
  const double m3 = d.array().cube().mean();
  return m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;
}

/// Anderson-Darling statistic for normality with estimated mean and variance.
inline double anderson_darling(const Eigen::Ref<const Vector>& x) {
  const Index r = x.size();
  const double mean = x.mean();
  const double sd = std::sqrt((x.array() - mean).square().sum() / static_cast<double>(r - 1));
  std::vector<double> u(static_cast<std::size_t>(r));
  for (Index i = 0; i < r; ++i) {
    u[static_cast<std::size_t>(i)] = std::clamp(normal_cdf((x(i) - mean) / sd), 1e-300, 1.0 - 1e-16);
  }
  std::sort(u.begin(), u.end());
  double s = 0.0;
  for (Index i = 0; i < r; ++i) {
    const double lo = u[static_cast<std::size_t>(i)];
    const double hi = u[static_cast<std::size_t>(r - 1 - i)];
    s += static_cast<double>(2 * i + 1) * (std::log(lo) + std::log1p(-hi));
  }
  const double rd = static_cast<double>(r);
  const double a2 = -rd - s / rd;
  return a2 * (1.0 + 0.75 / rd + 2.25 / (rd * rd));
}

inline Matrix scaled_errors(const std::vector<StudyRecord>& recs, const Vector& beta0) {
  Matrix z(static_cast<Index>(recs.size()), beta0.size());
  for (std::size_t k = 0; k < recs.size(); ++k) {
    z.row(static_cast<Index>(k)) =
        (std::sqrt(static_cast<double>(recs[k].n)) * (recs[k].beta - beta0)).transpose();
  }
  return z;
}

inline Matrix sample_covariance(const Matrix& z) {
  const Eigen::RowVectorXd mean = z.colwise().mean();
  const Matrix centered = z.rowwise() - mean;
  return (centered.transpose() * centered) / static_cast<double>(z.rows() - 1);
}

}  // namespace detail

/// Median ||beta_hat - beta0|| over reps at each sample size.
inline StudyResult run_consistency_study(const GenSpec& tmpl, const std::vector<Index>& n_grid, int reps,
                                         double alpha, const SolverConfig& solver, std::uint64_t seed) {
  if (reps < 1) fail(ErrorCode::DomainError, "run_consistency_study: reps must be >= 1");
  if (n_grid.empty()) fail(ErrorCode::DomainError, "run_consistency_study: empty n grid");
  for (std::size_t g = 1; g < n_grid.size(); ++g) {
    if (n_grid[g] <= n_grid[g - 1]) fail(ErrorCode::DomainError, "run_consistency_study: n grid must increase");
  }
  const auto t0 = std::chrono::steady_clock::now();
  StudyResult out{"consistency", tmpl, alpha, reps, seed, solver, {}, {}, {}, 0.0};
  out.records = detail::replicate(tmpl, n_grid, reps, alpha, solver, seed);

  ConsistencySummary summary;
  summary.n_grid = n_grid;
  for (std::size_t g = 0; g < n_grid.size(); ++g) {
    std::vector<double> errs;
    for (int r = 0; r < reps; ++r) errs.push_back(out.records[g * static_cast<std::size_t>(reps) + static_cast<std::size_t>(r)].error_norm);
    summary.median_error.push_back(detail::median(std::move(errs)));
  }
  summary.decreasing = true;
  for (std::size_t g = 1; g < n_grid.size(); ++g) {
    if (!(summary.median_error[g] < summary.median_error[g - 1])) summary.decreasing = false;
  }
  out.consistency = std::move(summary);
  out.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

/// Sampling distribution of sqrt(n) (beta_hat - beta0) at spec.n. With
/// rate_check the study is repeated at 4n and Cov(n) / Cov(4n) is reported.
inline StudyResult run_normality_study(const GenSpec& spec, int reps, double alpha, const SolverConfig& solver,
                                       std::uint64_t seed, bool rate_check = false) {
  if (reps < 200) fail(ErrorCode::DomainError, "run_normality_study: reps must be >= 200");
  const auto t0 = std::chrono::steady_clock::now();
  StudyResult out{"normality", spec, alpha, reps, seed, solver, {}, {}, {}, 0.0};
  out.records = detail::replicate(spec, {spec.n}, reps, alpha, solver, seed);

  NormalitySummary s;
  s.n = spec.n;
  const Matrix z = detail::scaled_errors(out.records, spec.beta0);
  s.mean = z.colwise().mean().transpose();
  s.covariance = detail::sample_covariance(z);
  const Index p = spec.p;
  for (Index a = 0; a < p; ++a) {
    for (Index b = 0; b < p; ++b) {
      if (a != b) s.max_abs_offdiag = std::max(s.max_abs_offdiag, std::abs(s.covariance(a, b)));
    }
  }
  s.skewness.resize(p);
  s.anderson_darling.resize(p);
  for (Index j = 0; j < p; ++j) {
    s.skewness(j) = detail::sample_skewness(z.col(j));
    s.anderson_darling(j) = detail::anderson_darling(z.col(j));
    s.ad_pass.push_back(s.anderson_darling(j) <= s.ad_critical_1pct);
  }
  s.constants = trim_constants(alpha, spec.sigma);

  if (rate_check) {
    const auto big = detail::replicate(spec, {4 * spec.n}, reps, alpha, solver, derive_seed(seed, 0x4e));
    Matrix cov4 = detail::sample_covariance(detail::scaled_errors(big, spec.beta0));
    s.rate_ratio = s.covariance.cwiseQuotient(cov4);
    s.covariance_4n = std::move(cov4);
  }
  out.normality = std::move(s);
  out.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace lts
