#pragma once

#include "lpacc/core.hpp"

#include <algorithm>
#include <cmath>

namespace lpacc {

/// Hölder conjugate of p; 1 maps to infinity and infinity to 1.
inline double dual_exponent(double p) {
  if (std::isinf(p)) return 1.0;
  if (p == 1.0) return kInf;
  return p / (p - 1.0);
}

/// ‖x‖_p for p >= 1 (or infinity), rescaled by max|x_i| so large entries do
/// not overflow and tiny ones do not underflow.
inline double pnorm(const Vector& x, double p) {
  require(p >= 1.0, "pnorm: p must be >= 1");
  if (x.size() == 0) return 0.0;
  const double m = x.cwiseAbs().maxCoeff();
  if (m == 0.0 || std::isinf(p)) return m;
  if (!std::isfinite(m)) return m;
  if (p == 2.0) return m * (x / m).norm();
  double acc = 0.0;
  for (Index i = 0; i < x.size(); ++i) acc += std::pow(std::abs(x[i]) / m, p);
  return m * std::pow(acc, 1.0 / p);
}

/// ‖x‖_p^p.
inline double pnorm_pow(const Vector& x, double p) {
  require(p >= 1.0 && std::isfinite(p), "pnorm_pow: p must be finite and >= 1");
  if (x.size() == 0) return 0.0;
  const double m = x.cwiseAbs().maxCoeff();
  if (m == 0.0) return 0.0;
  double acc = 0.0;
  for (Index i = 0; i < x.size(); ++i) acc += std::pow(std::abs(x[i]) / m, p);
  return std::pow(m, p) * acc;
}

/// Dual norm ‖g‖_q with q the conjugate of p.
inline double dual_norm(const Vector& g, double p) { return pnorm(g, dual_exponent(p)); }

/// Signed power |t|^{p-2} t, with value 0 at t = 0.
inline double signed_pow(double t, double p) {
  if (t == 0.0) return 0.0;
  return std::copysign(std::pow(std::abs(t), p - 1.0), t);
}

/// Φ(v)_i = |v_i|^{p-2} v_i, so that ∇‖v‖_p^p = p Φ(v).
inline Vector phi(const Vector& v, double p) {
  Vector out(v.size());
  for (Index i = 0; i < v.size(); ++i) out[i] = signed_pow(v[i], p);
  return out;
}

/// Inverse of Φ: Φ^{-1}(u)_i = sign(u_i) |u_i|^{1/(p-1)}.
inline Vector phi_inverse(const Vector& u, double p) { return phi(u, dual_exponent(p)); }

/// ∇‖x‖_p^p.
inline Vector grad_pnorm_pow(const Vector& x, double p) { return p * phi(x, p); }

namespace detail {

// One coordinate of the Bregman divergence of |.|^p between x + d and x.
// Each term is nonnegative; for |d| << |x| the direct formula cancels badly,
// so the binomial series of (1+u)^p - 1 - pu is summed instead.
inline double bregman_term(double x, double d, double p) {
  if (d == 0.0) return 0.0;
  if (x == 0.0) return std::pow(std::abs(d), p);
  if (p == 2.0) return d * d;
  const double u = d / x;
  if (std::abs(u) <= 0.125) {
    double coeff = p * (p - 1.0) / 2.0;
    double upow = u * u;
    double sum = coeff * upow;
    for (int k = 3; k < 200; ++k) {
      coeff *= (p - (k - 1)) / k;
      upow *= u;
      const double term = coeff * upow;
      sum += term;
      if (std::abs(term) <= 1e-18 * std::abs(sum)) break;
    }
    return std::pow(std::abs(x), p) * std::max(sum, 0.0);
  }
  const double ax = std::abs(x);
  const double val = std::pow(std::abs(x + d), p) - std::pow(ax, p) - p * signed_pow(x, p) * d;
  return std::max(val, 0.0);
}

}  // namespace detail

/// ω_p(x, y): Bregman divergence of ‖·‖_p^p at y, evaluated at x.
inline double bregman_omega_p(const Vector& x, const Vector& y, double p) {
  require_same_dim(x, y, "bregman_omega_p");
  require(p >= 2.0 && std::isfinite(p), "bregman_omega_p: p must be finite and >= 2");
  double acc = 0.0;
  for (Index i = 0; i < x.size(); ++i) acc += detail::bregman_term(y[i], x[i] - y[i], p);
  return acc;
}

struct SandwichBounds {
  double lower;
  double upper;
};

/// Two-sided bounds on ω_p(x + δ, x) in terms of the local weights
/// r_i = |x_i|^{p-2} (r ≡ 1 when p = 2) and ‖δ‖_p^p.
inline SandwichBounds bregman_sandwich(const Vector& x, const Vector& delta, double p) {
  require_same_dim(x, delta, "bregman_sandwich");
  require(p >= 2.0 && std::isfinite(p), "bregman_sandwich: p must be finite and >= 2");
  double quad = 0.0;
  for (Index i = 0; i < x.size(); ++i) {
    const double r = (p == 2.0) ? 1.0 : std::pow(std::abs(x[i]), p - 2.0);
    quad += r * delta[i] * delta[i];
  }
  const double tail = pnorm_pow(delta, p);
  return {p / 8.0 * quad + std::pow(2.0, -(p + 1.0)) * tail,
          2.0 * p * p * quad + std::pow(p, p) * tail};
}

}  // namespace lpacc
