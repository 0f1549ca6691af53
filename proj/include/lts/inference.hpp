/**
 * @file inference.hpp
 * Confidence regions for the regression coefficients: a normal-theory ball
 * and a bootstrap cloud trimmed by approximate halfspace depth.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "lts/error.hpp"
#include "lts/model.hpp"
#include "lts/numeric.hpp"
#include "lts/parallel.hpp"
#include "lts/population.hpp"
#include "lts/solver.hpp"

namespace lts {

enum class BallMode { PaperLiteral, Corrected };

inline std::string to_string(BallMode m) { return m == BallMode::Corrected ? "corrected" : "paper-literal"; }

inline BallMode parse_ball_mode(const std::string& s) {
  if (s == "corrected") return BallMode::Corrected;
  if (s == "paper-literal") return BallMode::PaperLiteral;
  fail(ErrorCode::UsageError, "unknown ball mode '" + s + "'");
}

struct NormalBallRegion {
  Vector center;
  double radius = 0.0;
  double gamma = 0.05;
  BallMode mode = BallMode::Corrected;

  bool contains(const Eigen::Ref<const Vector>& beta) const { return (beta - center).norm() <= radius; }
};

/// corrected:     radius = sqrt(cov_factor / n * chi2_p^{-1}(1 - gamma))
/// paper-literal: radius = sqrt(cov_factor / n) * chi2_p^{-1}(gamma)
inline NormalBallRegion ci_normal_ball(const Vector& center, const AsymptoticConstants& k, Index n, double gamma,
                                       BallMode mode = BallMode::Corrected) {
  if (!(gamma > 0.0 && gamma < 1.0)) fail(ErrorCode::DomainError, "ci_normal_ball: gamma must lie in (0, 1)");
  if (n < 1) fail(ErrorCode::DomainError, "ci_normal_ball: n must be positive");
  if (!(k.cov_factor > 0.0)) fail(ErrorCode::DomainError, "ci_normal_ball: invalid constants");
  const int p = static_cast<int>(center.size());
  const double var = k.cov_factor / static_cast<double>(n);
  const double radius = mode == BallMode::Corrected ? std::sqrt(var * chi2_quantile(p, 1.0 - gamma))
                                                    : std::sqrt(var) * chi2_quantile(p, gamma);
  return NormalBallRegion{center, radius, gamma, mode};
}

inline NormalBallRegion ci_normal_ball(const LtsFit& fit, const AsymptoticConstants& k, Index n, double gamma,
                                       BallMode mode = BallMode::Corrected) {
  return ci_normal_ball(fit.beta, k, n, gamma, mode);
}

/// n row indices drawn uniformly with replacement.
inline std::vector<Index> resample_indices(Index n, RandomStream& stream) {
  std::vector<Index> rows(static_cast<std::size_t>(n));
  for (auto& r : rows) r = stream.index(n);
  return rows;
}

struct BootstrapResult {
  std::vector<Vector> cloud;
  int redraws = 0;  // resamples discarded as solver-degenerate
};

/// m fits on with-replacement resamples. Replicate j uses stream (seed, j);
/// a degenerate resample is redrawn from the same stream, at most 10 times
/// in a row.
inline BootstrapResult bootstrap_fits(const Dataset& data, const TrimSpec& trim, int m, const SolverConfig& solver,
                                      std::uint64_t seed) {
  if (m < 1) fail(ErrorCode::DomainError, "bootstrap_fits: m must be >= 1");
  constexpr int kMaxConsecutiveRedraws = 10;
  std::vector<Vector> cloud(static_cast<std::size_t>(m));
  std::vector<int> redraws(static_cast<std::size_t>(m), 0);
  parallel_for(cloud.size(), solver.threads, [&](std::size_t j) {
    RandomStream stream = make_stream(seed, j);
    for (int attempt = 0;; ++attempt) {
      const Dataset sample = data.subset_rows(resample_indices(data.n(), stream));
      SolverConfig cfg = solver;
      cfg.threads = 1;
      cfg.seed = derive_seed(seed, j, static_cast<std::uint64_t>(attempt));
      try {
        cloud[j] = fit(sample, trim, cfg).beta;
        return;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::AllStartsDegenerate) throw;
      }
      if (++redraws[j] >= kMaxConsecutiveRedraws) {
        fail(ErrorCode::ResampleExhausted, "bootstrap_fits: replicate " + std::to_string(j) + " degenerate " +
                                               std::to_string(kMaxConsecutiveRedraws) + " times in a row");
      }
    }
  });
  return BootstrapResult{std::move(cloud), std::accumulate(redraws.begin(), redraws.end(), 0)};
}

/// Unit directions, uniform on the sphere. For p = 1 the single direction +1
/// makes every depth below exact.
inline Matrix sample_directions(Index p, int count, RandomStream& stream) {
  if (p == 1) return Matrix::Ones(1, 1);
  Matrix dirs(count, p);
  for (int k = 0; k < count; ++k) {
    Vector u = stream.normal_vector(p);
    dirs.row(k) = (u / u.norm()).transpose();
  }
  return dirs;
}

namespace detail {

inline void require_cloud(const std::vector<Vector>& cloud) {
  if (cloud.empty()) fail(ErrorCode::DomainError, "depth: empty cloud");
  for (const auto& b : cloud) {
    if (b.size() != cloud.front().size()) fail(ErrorCode::DimensionMismatch, "depth: ragged cloud");
  }
}

/// min over directions u of min(#{u'b_i >= u'x}, #{u'b_i <= u'x}) / m.
inline double depth_with_directions(const Eigen::Ref<const Vector>& point, const std::vector<Vector>& cloud,
                                    const Matrix& dirs) {
  const auto m = static_cast<double>(cloud.size());
  std::size_t best = cloud.size();
  for (Index k = 0; k < dirs.rows(); ++k) {
    const double px = dirs.row(k).dot(point);
    std::size_t ge = 0;
    std::size_t le = 0;
    for (const auto& b : cloud) {
      const double pb = dirs.row(k).dot(b);
      ge += pb >= px;
      le += pb <= px;
    }
    best = std::min({best, ge, le});
  }
  return static_cast<double>(best) / m;
}

}  // namespace detail

/// Approximate halfspace (Tukey) depth of point within cloud, from
/// n_directions random directions; exact for p = 1.
inline double depth(const Eigen::Ref<const Vector>& point, const std::vector<Vector>& cloud, int n_directions,
                    RandomStream& stream) {
  detail::require_cloud(cloud);
  if (point.size() != cloud.front().size()) fail(ErrorCode::DimensionMismatch, "depth: point dimension");
  if (n_directions < 1) fail(ErrorCode::DomainError, "depth: n_directions must be >= 1");
  return detail::depth_with_directions(point, cloud, sample_directions(point.size(), n_directions, stream));
}

/// Bootstrap cloud trimmed of its floor(gamma m) shallowest points. The
/// region is the depth predicate depth(beta) >= threshold evaluated with the
/// same direction set used to rank the cloud.
struct DepthRegion {
  std::vector<Vector> cloud;
  std::vector<double> depths;
  double threshold = 0.0;
  double gamma = 0.0;
  std::vector<std::size_t> retained;  // ascending
  std::vector<std::size_t> trimmed;   // ascending
  Matrix directions;

  double depth_of(const Eigen::Ref<const Vector>& beta) const {
    return detail::depth_with_directions(beta, cloud, directions);
  }
  bool contains(const Eigen::Ref<const Vector>& beta) const { return depth_of(beta) >= threshold; }
};

inline DepthRegion ci_depth_region(std::vector<Vector> cloud, double gamma, int n_directions, RandomStream& stream) {
  detail::require_cloud(cloud);
  if (cloud.size() < 10) fail(ErrorCode::DomainError, "ci_depth_region: need at least 10 cloud points");
  if (!(gamma > 0.0 && gamma < 1.0)) fail(ErrorCode::DomainError, "ci_depth_region: gamma must lie in (0, 1)");
  if (n_directions < 1) fail(ErrorCode::DomainError, "ci_depth_region: n_directions must be >= 1");
  const std::size_t m = cloud.size();
  DepthRegion region;
  region.gamma = gamma;
  region.directions = sample_directions(cloud.front().size(), n_directions, stream);

  // Per direction: sort projections once, then read both side counts by binary search.
  std::vector<std::size_t> best(m, m);
  std::vector<double> proj(m);
  std::vector<double> sorted(m);
  for (Index k = 0; k < region.directions.rows(); ++k) {
    for (std::size_t i = 0; i < m; ++i) proj[i] = region.directions.row(k).dot(cloud[i]);
    sorted = proj;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < m; ++i) {
      const auto le = static_cast<std::size_t>(std::upper_bound(sorted.begin(), sorted.end(), proj[i]) - sorted.begin());
      const auto ge = m - static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), proj[i]) - sorted.begin());
      best[i] = std::min({best[i], le, ge});
    }
  }
  region.depths.resize(m);
  for (std::size_t i = 0; i < m; ++i) region.depths[i] = static_cast<double>(best[i]) / static_cast<double>(m);

  // Shallowest first; among equal depths the higher index is trimmed first.
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return region.depths[a] < region.depths[b] || (region.depths[a] == region.depths[b] && a > b);
  });
  const auto n_trim = static_cast<std::size_t>(std::floor(gamma * static_cast<double>(m) + 1e-9));
  region.trimmed.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_trim));
  region.retained.assign(order.begin() + static_cast<std::ptrdiff_t>(n_trim), order.end());
  std::sort(region.trimmed.begin(), region.trimmed.end());
  std::sort(region.retained.begin(), region.retained.end());
  region.threshold = region.depths[order[n_trim]];
  region.cloud = std::move(cloud);
  return region;
}

struct Hull {
  std::string method;  // "interval", "monotone-chain" or "extreme-directions"
  std::vector<Vector> vertices;
};

/// Vertices of the retained points for plotting: exact for p <= 2, and for
/// p = 3 the union of extreme points along the region's directions.
inline std::optional<Hull> region_hull(const DepthRegion& region) {
  const Index p = region.cloud.front().size();
  if (p > 3) return std::nullopt;
  std::vector<Vector> pts;
  for (auto i : region.retained) pts.push_back(region.cloud[i]);
  Hull hull;
  if (p == 1) {
    auto [lo, hi] = std::minmax_element(pts.begin(), pts.end(), [](const Vector& a, const Vector& b) { return a(0) < b(0); });
    hull.method = "interval";
    hull.vertices = {*lo, *hi};
    return hull;
  }
  if (p == 2) {
    std::sort(pts.begin(), pts.end(), [](const Vector& a, const Vector& b) {
      return a(0) < b(0) || (a(0) == b(0) && a(1) < b(1));
    });
    pts.erase(std::unique(pts.begin(), pts.end(), [](const Vector& a, const Vector& b) { return a == b; }), pts.end());
    if (pts.size() < 3) {
      hull.method = "monotone-chain";
      hull.vertices = pts;
      return hull;
    }
    auto cross = [](const Vector& o, const Vector& a, const Vector& b) {
      return (a(0) - o(0)) * (b(1) - o(1)) - (a(1) - o(1)) * (b(0) - o(0));
    };
    std::vector<Vector> chain(2 * pts.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      while (k >= 2 && cross(chain[k - 2], chain[k - 1], pts[i]) <= 0) --k;
      chain[k++] = pts[i];
    }
    for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
      while (k >= lower && cross(chain[k - 2], chain[k - 1], pts[i]) <= 0) --k;
      chain[k++] = pts[i];
    }
    chain.resize(k - 1);
    hull.method = "monotone-chain";
    hull.vertices = std::move(chain);
    return hull;
  }
  std::vector<std::size_t> extreme;
  for (Index k = 0; k < region.directions.rows(); ++k) {
    std::size_t arg = 0;
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double v = region.directions.row(k).dot(pts[i]);
      if (v > top) {
        top = v;
        arg = i;
      }
    }
    extreme.push_back(arg);
  }
  std::sort(extreme.begin(), extreme.end());
  extreme.erase(std::unique(extreme.begin(), extreme.end()), extreme.end());
  hull.method = "extreme-directions";
  for (auto i : extreme) hull.vertices.push_back(pts[i]);
  return hull;
}

}  // namespace lts
