/**
 * @file population.hpp
 * Population-level quantities: the Gaussian asymptotic constants, the
 * closed-form influence function and a Fisher-consistency probe.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>

#include <boost/math/tools/roots.hpp>

#include "lts/error.hpp"
#include "lts/model.hpp"
#include "lts/numeric.hpp"
#include "lts/solver.hpp"

namespace lts {

/// Constants of the Gaussian-error limit law at trimming level alpha.
///
///   c  = sqrt(chi2_1 quantile at alpha)
///   C  = Phi(c) - 1/2 - c phi(c)      (half the truncated second moment)
///   C1 = 2 Phi(c) - 1                 (= alpha)
///   cov_factor = 2 C sigma^2 / C1^2
struct AsymptoticConstants {
  double alpha = 0.0;
  double c = 0.0;
  double C = 0.0;
  double C1 = 0.0;
  double sigma = 0.0;
  double cov_factor = 0.0;
};

inline AsymptoticConstants trim_constants(double alpha, double sigma) {
  if (!(alpha >= 0.5 && alpha < 1.0)) fail(ErrorCode::DomainError, "trim_constants: alpha must lie in [0.5, 1)");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) fail(ErrorCode::DomainError, "trim_constants: sigma must be > 0");
  AsymptoticConstants k;
  k.alpha = alpha;
  k.sigma = sigma;
  k.c = std::sqrt(chi2_quantile(1, alpha));
  const double phi_c = normal_cdf(k.c);
  k.C = phi_c - 0.5 - k.c * normal_pdf(k.c);
  k.C1 = 2.0 * phi_c - 1.0;
  k.cov_factor = 2.0 * k.C * sigma * sigma / (k.C1 * k.C1);
  return k;
}

/// Contaminating point z0 = (s0, t0) with carrier v0 = (1, s0')'.
struct InfluencePoint {
  Vector s0;
  double t0 = 0.0;

  Vector v0() const {
    Vector v(s0.size() + 1);
    v(0) = 1.0;
    v.tail(s0.size()) = s0;
    return v;
  }
};

/// Population functional at which the influence function is evaluated.
struct PopulationModel {
  Vector beta_lts;
  double sigma = 1.0;
  double alpha = 0.5;
  Matrix M;        // E[w w' 1(r^2 <= q)]
  double q = 0.0;  // alpha-quantile of the squared residual

  /// Spherical Gaussian carriers with independent N(0, sigma^2) errors:
  /// the trimming indicator is independent of w, so M = alpha I and
  /// q = sigma^2 c^2.
  static PopulationModel canonical(Index p, double alpha, double sigma, Vector beta_lts = {}) {
    if (p < 1) fail(ErrorCode::DomainError, "PopulationModel: p must be >= 1");
    if (!(sigma > 0.0)) fail(ErrorCode::DomainError, "PopulationModel: sigma must be > 0");
    PopulationModel m;
    m.beta_lts = beta_lts.size() == 0 ? Vector::Zero(p) : std::move(beta_lts);
    if (m.beta_lts.size() != p) fail(ErrorCode::DimensionMismatch, "PopulationModel: beta_lts size != p");
    m.sigma = sigma;
    m.alpha = alpha;
    m.M = alpha * Matrix::Identity(p, p);
    m.q = sigma * sigma * chi2_quantile(1, alpha);
    return m;
  }
};

/// Zero when the squared residual of z0 strictly exceeds q, otherwise
/// M^{-1} (t0 - v0' beta) v0.
inline Vector influence_function(const InfluencePoint& z0, const PopulationModel& model) {
  const Vector v0 = z0.v0();
  if (v0.size() != model.beta_lts.size() || model.M.rows() != v0.size()) {
    fail(ErrorCode::DimensionMismatch, "influence_function: point dimension does not match the model");
  }
  Cholesky chol(model.M);  // throws SingularMatrix before any branch is taken
  const double r = z0.t0 - v0.dot(model.beta_lts);
  if (r * r > model.q) return Vector::Zero(v0.size());
  return chol.solve(r * v0);
}

/// Plug-in estimate (1/n) sum_i w_i w_i' 1_i at the fitted coefficients;
/// equal to half the local Hessian.
inline Matrix empirical_M(const Dataset& data, const LtsFit& fit, const TrimSpec& trim) {
  detail::require_trim(data, trim);
  const auto sel = detail::select_active(residuals(data, fit.beta), trim.h);
  return (1.0 / static_cast<double>(data.n())) * detail::active_gram(data, sel.ascending);
}

/// Univariate error law given by density and CDF on [lower, upper].
struct ErrorModel {
  std::string name;
  std::function<double(double)> pdf;
  std::function<double(double)> cdf;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();

  static ErrorModel normal(double sigma = 1.0) {
    return {"normal", [sigma](double t) { return normal_pdf(t / sigma) / sigma; },
            [sigma](double t) { return normal_cdf(t / sigma); }};
  }

  /// Uniform on [-half_width, half_width].
  static ErrorModel centered_uniform(double half_width = 1.0) {
    const double a = half_width;
    return {"uniform", [a](double t) { return std::abs(t) <= a ? 0.5 / a : 0.0; },
            [a](double t) { return std::clamp((t + a) / (2.0 * a), 0.0, 1.0); }, -a, a};
  }

  /// Exponential(rate) shifted to mean zero; support [-1/rate, inf).
  static ErrorModel centered_exponential(double rate = 1.0) {
    const double shift = 1.0 / rate;
    return {"exponential",
            [rate, shift](double t) { return t >= -shift ? rate * std::exp(-rate * (t + shift)) : 0.0; },
            [rate, shift](double t) { return t >= -shift ? -std::expm1(-rate * (t + shift)) : 0.0; }, -shift,
            std::numeric_limits<double>::infinity()};
  }
};

/// E[e 1(e^2 <= q_e(alpha))], with q_e(alpha) the alpha-quantile of e^2.
/// Vanishes (Fisher consistency of the trimmed normal equations) for
/// symmetric error laws.
inline double fisher_check(const ErrorModel& err, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorCode::DomainError, "fisher_check: alpha must lie in (0, 1)");
  // P(e^2 <= s^2) = F(s) - F(-s), monotone in s >= 0.
  auto mass = [&err, alpha](double s) { return err.cdf(s) - err.cdf(-s) - alpha; };
  double hi = 1.0;
  while (mass(hi) < 0.0) {
    hi *= 2.0;
    if (hi > 1e12) fail(ErrorCode::QuadratureFailure, "fisher_check: cannot bracket the trimming quantile");
  }
  std::uintmax_t max_iter = 200;
  const auto [a, b] = boost::math::tools::toms748_solve(
      mass, 0.0, hi, boost::math::tools::eps_tolerance<double>(52), max_iter);
  const double s = 0.5 * (a + b);
  const double lo_limit = std::max(-s, err.lower);
  const double hi_limit = std::min(s, err.upper);
  if (!(lo_limit < hi_limit)) return 0.0;
  return integrate([&err](double t) { return t * err.pdf(t); }, lo_limit, hi_limit, 1e-11);
}

}  // namespace lts
