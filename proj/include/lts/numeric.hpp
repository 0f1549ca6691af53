/**
 * @file numeric.hpp
 * Dense SPD solves, normal / chi-square special functions, adaptive
 * quadrature and seedable random streams shared by every other header.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "lts/error.hpp"

namespace lts {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
/// Row-major so that per-observation rows w_i are contiguous.
using DesignMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline bool all_finite(const Eigen::Ref<const Matrix>& m) { return m.allFinite(); }

// ---------------------------------------------------------------------------
// Symmetric positive-definite solves
// ---------------------------------------------------------------------------

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
///
/// A pivot d_j is rejected when d_j <= 1e-12 * max_k A_kk, which is how a
/// rank-deficient h-subset shows up.
class Cholesky {
 public:
  static constexpr double kPivotTolerance = 1e-12;

  explicit Cholesky(const Eigen::Ref<const Matrix>& a) : l_(a.rows(), a.cols()) {
    if (a.rows() != a.cols()) fail(ErrorCode::DimensionMismatch, "Cholesky: matrix is not square");
    if (!a.allFinite()) fail(ErrorCode::DomainError, "Cholesky: non-finite entry");
    const Index p = a.rows();
    const double max_diag = p > 0 ? a.diagonal().maxCoeff() : 0.0;
    if (p > 0 && !(max_diag > 0.0)) fail(ErrorCode::SingularMatrix, "Cholesky: non-positive diagonal");
    const double tol = kPivotTolerance * max_diag;
    l_.setZero();
    for (Index j = 0; j < p; ++j) {
      double d = a(j, j);
      for (Index k = 0; k < j; ++k) d -= l_(j, k) * l_(j, k);
      if (!(d > tol)) {
        fail(ErrorCode::SingularMatrix, "Cholesky: pivot " + std::to_string(j) + " below tolerance");
      }
      const double ljj = std::sqrt(d);
      l_(j, j) = ljj;
      for (Index i = j + 1; i < p; ++i) {
        double s = a(i, j);
        for (Index k = 0; k < j; ++k) s -= l_(i, k) * l_(j, k);
        l_(i, j) = s / ljj;
      }
    }
  }

  Vector solve(const Eigen::Ref<const Vector>& b) const {
    const Index p = l_.rows();
    if (b.size() != p) fail(ErrorCode::DimensionMismatch, "Cholesky::solve: rhs size mismatch");
    Vector x = b;
    for (Index i = 0; i < p; ++i) {
      for (Index k = 0; k < i; ++k) x(i) -= l_(i, k) * x(k);
      x(i) /= l_(i, i);
    }
    for (Index i = p - 1; i >= 0; --i) {
      for (Index k = i + 1; k < p; ++k) x(i) -= l_(k, i) * x(k);
      x(i) /= l_(i, i);
    }
    return x;
  }

  const Matrix& factor() const noexcept { return l_; }

 private:
  Matrix l_;
};

/// Solves A x = b for symmetric positive-definite A.
inline Vector spd_solve(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Vector>& b) {
  if (a.rows() != b.size()) fail(ErrorCode::DimensionMismatch, "spd_solve: dimension mismatch");
  return Cholesky(a).solve(b);
}

// ---------------------------------------------------------------------------
// Normal and chi-square distribution functions
// ---------------------------------------------------------------------------

inline double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

namespace detail {

// Acklam's rational approximation (relative error ~1e-9); refined below.
inline double normal_quantile_initial(double p) {
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - p_low) {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace detail

/// Inverse of normal_cdf. Newton steps on Phi, safeguarded by a bisection
/// bracket that is tightened on every evaluation.
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) fail(ErrorCode::DomainError, "normal_quantile: p must lie in (0, 1)");
  if (p == 0.5) return 0.0;
  double lo = -40.0;
  double hi = 40.0;
  double x = detail::normal_quantile_initial(p);
  for (int it = 0; it < 100; ++it) {
    const double f = normal_cdf(x) - p;
    if (f == 0.0) return x;
    if (f < 0.0) lo = std::max(lo, x); else hi = std::min(hi, x);
    const double dens = normal_pdf(x);
    double next = dens > 0.0 ? x - f / dens : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x))) {
      return next;
    }
    x = next;
  }
  return x;
}

/// Quantile of the chi-square distribution with integer df.
inline double chi2_quantile(int df, double p) {
  if (df < 1) fail(ErrorCode::DomainError, "chi2_quantile: df must be >= 1");
  if (!(p >= 0.0 && p < 1.0)) fail(ErrorCode::DomainError, "chi2_quantile: p must lie in [0, 1)");
  if (p == 0.0) return 0.0;
  if (df == 1) {
    const double z = normal_quantile(0.5 * (1.0 + p));
    return z * z;
  }
  if (df == 2) return -2.0 * std::log1p(-p);
  return 2.0 * boost::math::gamma_p_inv(0.5 * df, p);
}

// ---------------------------------------------------------------------------
// Quadrature
// ---------------------------------------------------------------------------

/// Adaptive Gauss-Kronrod integral of f over [a, b]; throws QuadratureFailure
/// when the error estimate exceeds abs_tol.
inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double abs_tol = 1e-11) {
  if (a == b) return 0.0;
  double error = 0.0;
  const double value = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
      f, a, b, 25, 1e-14, &error);
  if (!std::isfinite(value) || error > abs_tol) {
    fail(ErrorCode::QuadratureFailure,
         "integrate: error estimate " + std::to_string(error) + " exceeds tolerance");
  }
  return value;
}

// ---------------------------------------------------------------------------
// Random streams
// ---------------------------------------------------------------------------

/// Deterministic stream keyed by (seed, stream id). Single owner; not shared
/// across threads.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream_id) : seed_(seed), stream_id_(stream_id) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream_id),
                      static_cast<std::uint32_t>(stream_id >> 32), 0x4c545321u};
    engine_.seed(seq);
  }

  double uniform() { return uniform_(engine_); }
  double normal() { return normal_(engine_); }

  /// Uniform integer in [0, n).
  Index index(Index n) {
    return static_cast<Index>(std::uniform_int_distribution<std::uint64_t>(
        0, static_cast<std::uint64_t>(n - 1))(engine_));
  }

  Vector normal_vector(Index size) {
    Vector v(size);
    for (Index i = 0; i < size; ++i) v(i) = normal();
    return v;
  }

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
};

inline RandomStream make_stream(std::uint64_t seed, std::uint64_t stream_id) {
  return RandomStream(seed, stream_id);
}

/// splitmix64 finalizer; used to derive child seeds from (seed, a, b).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(seed) ^ a) ^ (b * 0xd6e8feb86659fd93ULL));
}

}  // namespace lts
