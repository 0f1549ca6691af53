/**
 * @file model.hpp
 * Regression data model, residuals, the empirical trimmed objective and its
 * piecewise-quadratic local geometry.
 *
 * For a fixed coefficient vector the h observations with the smallest
 * squared residuals (the active h-subset) determine the objective; on the
 * open set of coefficients sharing that subset the objective is the
 * ordinary least-squares quadratic over those rows.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "lts/error.hpp"
#include "lts/numeric.hpp"

namespace lts {

/// Response vector and design matrix whose first column is the intercept.
class Dataset {
 public:
  Dataset(Vector y, DesignMatrix w) : y_(std::move(y)), w_(std::move(w)) {
    if (y_.size() != w_.rows()) {
      fail(ErrorCode::DimensionMismatch, "Dataset: y has " + std::to_string(y_.size()) +
                                             " entries but W has " + std::to_string(w_.rows()) + " rows");
    }
    if (w_.cols() < 1) fail(ErrorCode::DimensionMismatch, "Dataset: design needs an intercept column");
    if (!y_.allFinite() || !w_.allFinite()) fail(ErrorCode::DomainError, "Dataset: non-finite value");
    for (Index i = 0; i < w_.rows(); ++i) {
      if (w_(i, 0) != 1.0) {
        fail(ErrorCode::DomainError, "Dataset: first design column must be 1 (row " + std::to_string(i) + ")");
      }
    }
  }

  /// Builds W = [1 | x] from the carriers x (n x (p-1)).
  static Dataset from_xy(const Vector& y, const Eigen::Ref<const Matrix>& x) {
    DesignMatrix w(x.rows(), x.cols() + 1);
    w.col(0).setOnes();
    w.rightCols(x.cols()) = x;
    return Dataset(y, std::move(w));
  }

  Index n() const noexcept { return y_.size(); }
  Index p() const noexcept { return w_.cols(); }
  const Vector& y() const noexcept { return y_; }
  const DesignMatrix& w() const noexcept { return w_; }
  auto row(Index i) const { return w_.row(i); }

  /// Rows selected by index, in the given order (duplicates allowed).
  Dataset subset_rows(const std::vector<Index>& rows) const {
    Vector y(static_cast<Index>(rows.size()));
    DesignMatrix w(static_cast<Index>(rows.size()), p());
    for (std::size_t k = 0; k < rows.size(); ++k) {
      y(static_cast<Index>(k)) = y_(rows[k]);
      w.row(static_cast<Index>(k)) = w_.row(rows[k]);
    }
    return Dataset(std::move(y), std::move(w));
  }

 private:
  Vector y_;
  DesignMatrix w_;
};

/// Trimming level and the derived subset size h = floor(alpha n) + 1.
struct TrimSpec {
  double alpha = 0.5;
  Index h = 0;
  double alpha_max = 0.95;

  static TrimSpec make(double alpha, Index n, double alpha_max = 0.95) {
    if (!(alpha_max < 1.0)) fail(ErrorCode::DomainError, "TrimSpec: alpha_max must be < 1");
    if (!(alpha >= 0.5 && alpha <= alpha_max)) {
      fail(ErrorCode::DomainError, "TrimSpec: alpha " + std::to_string(alpha) + " outside [0.5, " +
                                       std::to_string(alpha_max) + "]");
    }
    // The 1e-9 guards products such as 0.57 * 100 = 56.999999999999993.
    const Index h = static_cast<Index>(std::floor(alpha * static_cast<double>(n) + 1e-9)) + 1;
    if (h < (n + 1) / 2 || h >= n) {
      fail(ErrorCode::DomainError, "TrimSpec: h = " + std::to_string(h) + " violates ceil(n/2) <= h < n for n = " +
                                       std::to_string(n));
    }
    return TrimSpec{alpha, h, alpha_max};
  }
};

/// Indices of the h smallest squared residuals, ordered by (r^2, index).
struct HSubset {
  std::vector<Index> indices;
  bool boundary = false;
};

struct LocalQuadratic {
  Vector gradient;
  Matrix hessian;
  HSubset subset;
};

inline Vector residuals(const Dataset& data, const Eigen::Ref<const Vector>& beta) {
  if (beta.size() != data.p()) {
    fail(ErrorCode::DimensionMismatch, "residuals: beta has " + std::to_string(beta.size()) +
                                           " entries, expected " + std::to_string(data.p()));
  }
  return data.y() - data.w() * beta;
}

namespace detail {

inline constexpr double kBoundaryTolerance = 1e-12;

struct Selection {
  std::vector<Index> ascending;  // active rows in increasing index order
  std::vector<Index> by_rank;    // same rows ordered by (r^2, index); filled on request
  double retained_sum = 0.0;     // sum of active r^2, accumulated in index order
  bool boundary = false;
};

inline Selection select_active(const Vector& r, Index h, bool want_rank_order = false) {
  const Index n = r.size();
  Vector r2 = r.array().square();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  auto less = [&r2](Index a, Index b) { return r2(a) < r2(b) || (r2(a) == r2(b) && a < b); };
  std::nth_element(order.begin(), order.begin() + h, order.end(), less);

  Selection sel;
  double kth = 0.0;
  for (Index k = 0; k < h; ++k) kth = std::max(kth, r2(order[static_cast<std::size_t>(k)]));
  const double next = r2(order[static_cast<std::size_t>(h)]);
  sel.boundary = std::abs(next - kth) <= kBoundaryTolerance * (1.0 + kth);

  if (want_rank_order) {
    sel.by_rank.assign(order.begin(), order.begin() + h);
    std::sort(sel.by_rank.begin(), sel.by_rank.end(), less);
  }
  sel.ascending.assign(order.begin(), order.begin() + h);
  std::sort(sel.ascending.begin(), sel.ascending.end());
  for (Index i : sel.ascending) sel.retained_sum += r2(i);
  return sel;
}

/// Sum of w_i w_i' over the given rows.
inline Matrix active_gram(const Dataset& data, const std::vector<Index>& rows) {
  const Index p = data.p();
  Matrix g = Matrix::Zero(p, p);
  const auto& w = data.w();
  for (Index i : rows) {
    const double* wi = w.row(i).data();
    for (Index a = 0; a < p; ++a) {
      for (Index b = 0; b <= a; ++b) g(a, b) += wi[a] * wi[b];
    }
  }
  for (Index a = 0; a < p; ++a) {
    for (Index b = 0; b < a; ++b) g(b, a) = g(a, b);
  }
  return g;
}

/// Sum of v_i w_i over the given rows.
inline Vector active_moment(const Dataset& data, const Vector& v, const std::vector<Index>& rows) {
  Vector m = Vector::Zero(data.p());
  for (Index i : rows) m.noalias() += v(i) * data.row(i).transpose();
  return m;
}

inline void require_trim(const Dataset& data, const TrimSpec& trim) {
  if (trim.h < 1 || trim.h >= data.n()) {
    fail(ErrorCode::DomainError, "trim spec h = " + std::to_string(trim.h) + " incompatible with n = " +
                                     std::to_string(data.n()));
  }
}

}  // namespace detail

/// Ties at rank h go to the smaller row index.
inline HSubset h_subset(const Dataset& data, const Eigen::Ref<const Vector>& beta, const TrimSpec& trim) {
  detail::require_trim(data, trim);
  auto sel = detail::select_active(residuals(data, beta), trim.h, true);
  return HSubset{std::move(sel.by_rank), sel.boundary};
}

/// (1/n) times the sum of the h smallest squared residuals.
inline double objective(const Dataset& data, const Eigen::Ref<const Vector>& beta, const TrimSpec& trim) {
  detail::require_trim(data, trim);
  return detail::select_active(residuals(data, beta), trim.h).retained_sum / static_cast<double>(data.n());
}

/// Gradient and Hessian of the objective on the piece containing beta.
inline LocalQuadratic local_quadratic(const Dataset& data, const Eigen::Ref<const Vector>& beta,
                                      const TrimSpec& trim) {
  detail::require_trim(data, trim);
  const Vector r = residuals(data, beta);
  auto sel = detail::select_active(r, trim.h, true);
  if (sel.boundary) {
    fail(ErrorCode::OnPieceBoundary, "local_quadratic: tie at rank h, gradient undefined");
  }
  const double scale = 2.0 / static_cast<double>(data.n());
  LocalQuadratic lq;
  lq.gradient = -scale * detail::active_moment(data, r, sel.ascending);
  lq.hessian = scale * detail::active_gram(data, sel.ascending);
  lq.subset = HSubset{std::move(sel.by_rank), false};
  return lq;
}

/// Sampling probe: true iff the active subset (as a set) is unchanged at
/// `trials` points drawn uniformly from the ball of radius delta about beta.
inline bool piece_check(const Dataset& data, const Eigen::Ref<const Vector>& beta, const TrimSpec& trim,
                        double delta, int trials, RandomStream& stream) {
  detail::require_trim(data, trim);
  const auto base = detail::select_active(residuals(data, beta), trim.h).ascending;
  const Index p = data.p();
  for (int t = 0; t < trials; ++t) {
    Vector u = stream.normal_vector(p);
    u /= u.norm();
    const double radius = delta * std::pow(stream.uniform(), 1.0 / static_cast<double>(p));
    const Vector moved = beta + radius * u;
    if (detail::select_active(residuals(data, moved), trim.h).ascending != base) return false;
  }
  return true;
}

}  // namespace lts
