/**
 * @file solver.hpp
 * Least trimmed squares fits: exhaustive h-subset enumeration and a
 * multi-start concentration-step search.
 *
 * A concentration step fixes the active h-subset at the current coefficients
 * and refits least squares on it. The objective never increases, and a
 * coefficient vector whose refit reproduces its own subset satisfies the
 * trimmed normal equations, so the iteration ends at a fixed point after
 * finitely many steps.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lts/error.hpp"
#include "lts/model.hpp"
#include "lts/numeric.hpp"
#include "lts/parallel.hpp"

namespace lts {

struct SolverConfig {
  int n_starts = 500;
  int max_csteps = 100;
  double tol_objective = 1e-12;  // relative
  double tol_stationarity = 1e-8;
  std::uint64_t seed = 0;
  unsigned threads = 1;  // 0 = hardware concurrency
};

struct LtsFit {
  Vector beta;
  double objective_value = 0.0;
  HSubset subset;
  /// Concentration steps of the winning start, or subsets evaluated for an
  /// exhaustive fit.
  int iterations = 0;
  bool converged = false;
  /// Winning elemental start, or the lexicographic rank of the winning subset.
  std::int64_t start_index = -1;
};

/// One concentration run from a given start.
struct Concentration {
  Vector beta;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> trace;  // objective before the first step, then after each step
};

/// Least squares on the given rows via the normal equations.
inline Vector ls_fit_subset(const Dataset& data, const std::vector<Index>& rows) {
  if (static_cast<Index>(rows.size()) < data.p()) {
    fail(ErrorCode::SingularMatrix, "ls_fit_subset: fewer rows than coefficients");
  }
  return spd_solve(detail::active_gram(data, rows), detail::active_moment(data, data.y(), rows));
}

/// One application of the fixed-point map: select the h-subset at beta and
/// refit on it. Returns the new coefficients and their objective.
inline std::pair<Vector, double> c_step(const Dataset& data, const Eigen::Ref<const Vector>& beta,
                                        const TrimSpec& trim) {
  detail::require_trim(data, trim);
  const auto sel = detail::select_active(residuals(data, beta), trim.h);
  Vector next = ls_fit_subset(data, sel.ascending);
  const double obj = objective(data, next, trim);
  return {std::move(next), obj};
}

/// Iterates concentration steps until the subset repeats, the relative
/// objective decrease drops to tol_objective, or max_csteps is reached.
inline Concentration concentrate(const Dataset& data, const TrimSpec& trim, const Vector& start,
                                 const SolverConfig& config) {
  detail::require_trim(data, trim);
  const double inv_n = 1.0 / static_cast<double>(data.n());
  Concentration out;
  out.beta = start;
  auto sel = detail::select_active(residuals(data, start), trim.h);
  out.objective = sel.retained_sum * inv_n;
  out.trace.push_back(out.objective);
  for (int step = 0; step < config.max_csteps; ++step) {
    Vector next = ls_fit_subset(data, sel.ascending);
    auto next_sel = detail::select_active(residuals(data, next), trim.h);
    const double next_obj = next_sel.retained_sum * inv_n;
    const bool same_subset = next_sel.ascending == sel.ascending;
    const bool stalled = out.objective - next_obj <= config.tol_objective * out.objective;
    out.beta = std::move(next);
    out.objective = next_obj;
    out.trace.push_back(next_obj);
    ++out.iterations;
    sel = std::move(next_sel);
    if (same_subset || stalled) {
      out.converged = true;
      break;
    }
  }
  return out;
}

namespace detail {

inline std::vector<Index> elemental_rows(Index n, Index p, RandomStream& stream) {
  std::vector<Index> rows;
  rows.reserve(static_cast<std::size_t>(p));
  while (static_cast<Index>(rows.size()) < p) {
    const Index i = stream.index(n);
    if (std::find(rows.begin(), rows.end(), i) == rows.end()) rows.push_back(i);
  }
  return rows;
}

inline LtsFit finish_fit(const Dataset& data, const TrimSpec& trim, Vector beta, int iterations,
                         bool converged, std::int64_t start_index) {
  LtsFit fit;
  fit.objective_value = objective(data, beta, trim);
  fit.subset = h_subset(data, beta, trim);
  fit.beta = std::move(beta);
  fit.iterations = iterations;
  fit.converged = converged;
  fit.start_index = start_index;
  return fit;
}

}  // namespace detail

/// Multi-start concentration fit. Each start is an exact fit through p
/// random rows drawn from stream (config.seed, start index); rank-deficient
/// starts are dropped. The lowest objective wins, ties to the earliest start.
inline LtsFit fit(const Dataset& data, const TrimSpec& trim, const SolverConfig& config = {}) {
  detail::require_trim(data, trim);
  if (config.n_starts < 1) fail(ErrorCode::DomainError, "fit: n_starts must be >= 1");
  if (trim.h < data.p()) fail(ErrorCode::DomainError, "fit: h must be at least p");

  std::vector<std::optional<Concentration>> runs(static_cast<std::size_t>(config.n_starts));
  parallel_for(runs.size(), config.threads, [&](std::size_t s) {
    RandomStream stream = make_stream(config.seed, s);
    try {
      const Vector start = ls_fit_subset(data, detail::elemental_rows(data.n(), data.p(), stream));
      runs[s] = concentrate(data, trim, start, config);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::SingularMatrix) throw;
    }
  });

  std::optional<std::size_t> best;
  for (std::size_t s = 0; s < runs.size(); ++s) {
    if (runs[s] && (!best || runs[s]->objective < runs[*best]->objective)) best = s;
  }
  if (!best) fail(ErrorCode::AllStartsDegenerate, "fit: every elemental start was rank-deficient");
  auto& win = *runs[*best];
  return detail::finish_fit(data, trim, std::move(win.beta), win.iterations, win.converged,
                            static_cast<std::int64_t>(*best));
}

inline double binomial(Index n, Index k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double c = 1.0;
  for (Index i = 1; i <= k; ++i) c = c * static_cast<double>(n - k + i) / static_cast<double>(i);
  return std::round(c);
}

/// Global minimizer by visiting every h-subset in lexicographic order.
/// Each subset's least-squares fit is scored by the full objective; the
/// first strict minimum wins.
inline LtsFit exact_enumerate(const Dataset& data, const TrimSpec& trim, double max_subsets = 2e6) {
  detail::require_trim(data, trim);
  const Index n = data.n();
  const Index h = trim.h;
  const double total = binomial(n, h);
  if (total > max_subsets) {
    fail(ErrorCode::TooManySubsets, "exact_enumerate: C(" + std::to_string(n) + ", " + std::to_string(h) +
                                        ") exceeds the cap of " + std::to_string(static_cast<long long>(max_subsets)));
  }
  std::vector<Index> comb(static_cast<std::size_t>(h));
  std::iota(comb.begin(), comb.end(), Index{0});

  std::optional<Vector> best_beta;
  double best_obj = std::numeric_limits<double>::infinity();
  std::int64_t best_rank = -1;
  std::int64_t rank = 0;
  int evaluated = 0;
  while (true) {
    ++evaluated;
    try {
      Vector beta = ls_fit_subset(data, comb);
      const double obj = objective(data, beta, trim);
      if (obj < best_obj) {
        best_obj = obj;
        best_beta = std::move(beta);
        best_rank = rank;
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::SingularMatrix) throw;
    }
    // Advance to the next combination in lexicographic order.
    Index i = h - 1;
    while (i >= 0 && comb[static_cast<std::size_t>(i)] == n - h + i) --i;
    if (i < 0) break;
    ++comb[static_cast<std::size_t>(i)];
    for (Index j = i + 1; j < h; ++j) comb[static_cast<std::size_t>(j)] = comb[static_cast<std::size_t>(j - 1)] + 1;
    ++rank;
  }
  if (!best_beta) fail(ErrorCode::AllStartsDegenerate, "exact_enumerate: every h-subset was rank-deficient");
  return detail::finish_fit(data, trim, std::move(*best_beta), evaluated, true, best_rank);
}

/// Norm of the trimmed normal-equation residual sum_i r_i w_i 1_i at beta.
inline double check_stationarity(const Dataset& data, const Eigen::Ref<const Vector>& beta, const TrimSpec& trim) {
  detail::require_trim(data, trim);
  const Vector r = residuals(data, beta);
  const auto sel = detail::select_active(r, trim.h);
  return detail::active_moment(data, r, sel.ascending).norm();
}

inline double check_stationarity(const Dataset& data, const LtsFit& fit, const TrimSpec& trim) {
  return check_stationarity(data, fit.beta, trim);
}

/// check_stationarity divided by sum_i ||w_i|| (|y_i| + |w_i' beta|) over the
/// active rows, the magnitude that bounds rounding in the normal equations.
inline double scaled_stationarity(const Dataset& data, const Eigen::Ref<const Vector>& beta, const TrimSpec& trim) {
  detail::require_trim(data, trim);
  const Vector r = residuals(data, beta);
  const auto sel = detail::select_active(r, trim.h);
  double scale = 0.0;
  for (Index i : sel.ascending) {
    scale += data.row(i).norm() * (std::abs(data.y()(i)) + std::abs(data.row(i).dot(beta)));
  }
  const double raw = detail::active_moment(data, r, sel.ascending).norm();
  return scale > 0.0 ? raw / scale : raw;
}

}  // namespace lts
