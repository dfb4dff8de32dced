#pragma once

#include "lpacc/core.hpp"
#include "lpacc/newton.hpp"
#include "lpacc/objective.hpp"
#include "lpacc/pnorm.hpp"
#include "lpacc/roots.hpp"

#include <algorithm>
#include <cmath>

namespace lpacc::piecewise {

// Exact solvers for f(x) = β max_{j<k} (x_j - o_j) plus a p-norm penalty.
//
// Every problem here has the epigraph form min β t + P(x) s.t. x_j <= t + o_j.
// For fixed t the best x clips the center at the caps, so only the scalar t
// remains and its optimality condition is monotone. Coordinates the caps do
// not reach keep their center value exactly, which is what keeps supports
// from growing spuriously.

inline Vector clip_to_caps(const Vector& c, const Vector& o, double t) {
  Vector x = c;
  for (Index j = 0; j < o.size(); ++j) x[j] = std::min(c[j], t + o[j]);
  return x;
}

inline double highest_cap_start(const Vector& c, const Vector& o) {
  double t = -kInf;
  for (Index j = 0; j < o.size(); ++j) t = std::max(t, c[j] - o[j]);
  return t;
}

/// argmin β max_j (x_j - o_j) + ρ ‖x - c‖_p^e.
inline Vector penalized(const CoordinateMaxObjective& f, const Vector& c, double p, double e, double rho) {
  const Vector& o = f.thresholds();
  const double beta = f.beta();
  auto dphi = [&](double t) {
    double s = 0.0, s1 = 0.0;
    for (Index j = 0; j < o.size(); ++j) {
      const double z = c[j] - t - o[j];
      if (z > 0.0) {
        s += std::pow(z, p);
        s1 += std::pow(z, p - 1.0);
      }
    }
    if (s == 0.0) return beta;
    return beta - rho * e * std::pow(s, e / p - 1.0) * s1;
  };
  const double hi = highest_cap_start(c, o);
  const double t = bisect_increasing(dphi, hi - 1.0, hi);
  return clip_to_caps(c, o, t);
}

/// argmin β max_j (x_j - o_j) + ρ ‖x - c‖_p^p + (μ/p) ‖x‖_p^p.
inline Vector penalized_shrunk(const CoordinateMaxObjective& f, const Vector& c, double p, double rho, double mu) {
  if (mu == 0.0) return penalized(f, c, p, p, rho);
  const Vector& o = f.thresholds();
  const double beta = f.beta();
  // Without caps each coordinate solves ρ p Φ(x - c) + μ Φ(x) = 0, i.e. x = c / (1 + κ).
  const double kappa = std::pow(mu / (rho * p), 1.0 / (p - 1.0));
  const Vector free = c / (1.0 + kappa);
  auto dphi = [&](double t) {
    double d = beta;
    for (Index j = 0; j < o.size(); ++j) {
      const double xj = t + o[j];
      if (xj < free[j]) d += rho * p * signed_pow(xj - c[j], p) + mu * signed_pow(xj, p);
    }
    return d;
  };
  const double hi = highest_cap_start(free, o);
  const double t = bisect_increasing(dphi, hi - 1.0, hi);
  return clip_to_caps(free, o, t);
}

/// argmin f over ‖x - c‖_p <= r with the smallest displacement. The cap level
/// solves Σ_j (c_j - t - o_j)_+^p = r^p, so the result lies on the sphere.
inline Vector ball(const CoordinateMaxObjective& f, const Vector& c, double p, double r) {
  const Vector& o = f.thresholds();
  const double rp = std::pow(r, p);
  auto h = [&](double t) {
    double s = 0.0;
    for (Index j = 0; j < o.size(); ++j) {
      const double z = c[j] - t - o[j];
      if (z > 0.0) s += std::pow(z, p);
    }
    return rp - s;
  };
  const double hi = highest_cap_start(c, o);
  const double t = bisect_increasing(h, hi - r, hi);
  return clip_to_caps(c, o, t);
}

struct ConstrainedMin {
  double value;
  Vector x;
};

/// min f over ‖x‖_p <= R with x_j = 0 for j >= support (support <= d).
inline ConstrainedMin minimum_on_ball(const CoordinateMaxObjective& f, double p, double R, Index support) {
  const Vector& o = f.thresholds();
  const Index k = o.size();
  require(support >= 1, "minimum_on_ball: support must be >= 1");
  const Index m = std::min(support, k);
  // Zeroed coordinates below k force t >= -o_j.
  double floor_t = -kInf;
  for (Index j = m; j < k; ++j) floor_t = std::max(floor_t, -o[j]);
  const double rp = std::pow(R, p);
  auto h = [&](double t) {
    double s = 0.0;
    for (Index j = 0; j < m; ++j) {
      const double z = -t - o[j];
      if (z > 0.0) s += std::pow(z, p);
    }
    return rp - s;
  };
  double hi = 0.0;
  for (Index j = 0; j < m; ++j) hi = std::max(hi, -o[j]);
  double t = bisect_increasing(h, hi - R - 1.0, hi);
  t = std::max(t, floor_t);
  Vector x = Vector::Zero(f.dim());
  for (Index j = 0; j < m; ++j) x[j] = std::min(0.0, t + o[j]);
  return {f.beta() * t, x};
}

/// Distance of g from ∂f(x): g must be supported on the active pieces, be
/// nonnegative there, and sum to β.
inline double subgradient_residual(const CoordinateMaxObjective& f, const Vector& x, const Vector& g) {
  const Vector& o = f.thresholds();
  const double beta = f.beta();
  const double top = (x.head(o.size()) - o).maxCoeff();
  const double slack = 1e-9 * std::max(1.0, std::abs(top));
  double off = 0.0, sum = 0.0, neg = 0.0;
  for (Index j = 0; j < g.size(); ++j) {
    const bool active = j < o.size() && x[j] - o[j] >= top - slack;
    if (active) {
      sum += g[j];
      neg += std::max(0.0, -g[j]);
    } else {
      off += std::abs(g[j]);
    }
  }
  return off + neg + std::abs(sum - beta);
}

/// Log-sum-exp smoothing of a generic max-affine objective, driven to small
/// temperature by continuation. `smooth_part(x)` adds the penalty terms.
/// Objective error from smoothing is at most τ log m at the final τ.
template <class Smooth, class Residual>
NewtonResult smoothed(const MaxAffineObjective& f, Smooth&& smooth_part, Residual&& residual,
                      Vector x0, double scale, double tol) {
  const Matrix& A = f.rows();
  const Vector& b = f.offsets();
  NewtonResult r;
  r.x = std::move(x0);
  double tau = scale;
  const double tau_end = 1e-11 * scale;
  int total = 0;
  while (true) {
    auto eval = [&](const Vector& x) {
      LocalModel m = smooth_part(x);
      const Vector z = (A * x + b) / tau;
      const double zmax = z.maxCoeff();
      const Vector w = (z.array() - zmax).exp().matrix();
      const double sw = w.sum();
      const Vector pi = w / sw;
      m.value += tau * (zmax + std::log(sw));
      m.grad += A.transpose() * pi;
      Matrix cov = Matrix(pi.asDiagonal()) - pi * pi.transpose();
      m.hess += A.transpose() * cov * A / tau;
      return m;
    };
    const double stage_tol = std::max(tol, 1e-13 * scale / tau);
    NewtonResult stage = minimize_newton(eval, residual, r.x, NewtonOptions{200, stage_tol});
    total += stage.iterations;
    r = std::move(stage);
    if (tau <= tau_end) break;
    tau = std::max(tau * 0.1, tau_end);
  }
  r.iterations = total;
  return r;
}

}  // namespace lpacc::piecewise
