#pragma once

#include "lpacc/core.hpp"
#include "lpacc/geometry.hpp"
#include "lpacc/newton.hpp"
#include "lpacc/objective.hpp"
#include "lpacc/piecewise.hpp"
#include "lpacc/pnorm.hpp"
#include "lpacc/roots.hpp"

#include <cmath>
#include <optional>
#include <type_traits>

namespace lpacc {

/// Query for the s-power prox argmin_x f(x) + λ‖x - c‖_p^s, optionally over
/// ‖x‖_p <= radius.
struct ProxQuery {
  Vector center;
  PNormParams params;
  std::optional<double> radius;
  double tol = 1e-10;
};

struct ProxResult {
  Vector x;
  /// λ‖x - c‖_p^{s-p}. The solution also minimizes f + (s/p) lambda_t ‖x - c‖_p^p;
  /// for the p-power prox this is the weight that was passed in.
  double lambda_t = 0.0;
  double kkt_residual = 0.0;
  int inner_iterations = 0;
  /// Element of ∂f(x) (plus the constraint normal in constrained mode) that
  /// stationarity pins down.
  Vector subgradient;
  /// Multiplier μ of the (μ/p)‖x‖_p^p constraint term; 0 when inactive.
  double multiplier = 0.0;
};

struct BallResult {
  Vector x;
  /// ‖∇f(x)‖_q / r^{p-1}; at the boundary ∇f(x) = -lambda Φ(x - c).
  double lambda = 0.0;
  bool at_boundary = false;
  double kkt_residual = 0.0;
  int inner_iterations = 0;
  Vector subgradient;
};

namespace detail {

// f(x) + ρ‖M(x - c)‖_p^e + (μ/p)‖x‖_p^p.
struct Penalized {
  const Vector* center;
  double exponent;
  double rho;
  double mu = 0.0;
};

template <class Geometry>
LocalModel penalty_model(const Penalized& pen, const Geometry& geom, const Vector& x) {
  LocalModel m = geom.penalty(x - *pen.center, pen.exponent, pen.rho);
  if (pen.mu > 0.0) {
    const double p = geom.p();
    PenaltyDerivatives d = penalty_derivatives(x, p, p, pen.mu / p);
    m.value += d.value;
    m.grad += d.grad;
    m.hess.diagonal() += d.diag;
  }
  return m;
}

// Inner tolerances are relative to the gradient at the center, so the
// step stays accurate when the outer loop closes in on a minimizer.
template <class Geometry>
double gradient_scale(const Objective& f, const Vector& c, const Geometry& geom) {
  const double g = geom.dual_norm(f.gradient(c));
  return (g > 0.0 && std::isfinite(g)) ? g : 1.0;
}

struct InnerSolve {
  Vector x;
  int iterations = 0;
};

template <class Geometry>
InnerSolve solve_penalized(const Objective& f, const Penalized& pen, const Geometry& geom,
                           const Vector& x0, double tol, double scale) {
  constexpr bool identity = std::is_same_v<Geometry, IdentityGeometry>;
  const double p = geom.p();
  if (f.tag() == SmoothnessTag::piecewise_linear_max) {
    if constexpr (identity) {
      if (const auto* cm = dynamic_cast<const CoordinateMaxObjective*>(&f)) {
        if (pen.mu == 0.0) return {piecewise::penalized(*cm, *pen.center, p, pen.exponent, pen.rho), 1};
        if (pen.exponent == p) return {piecewise::penalized_shrunk(*cm, *pen.center, p, pen.rho, pen.mu), 1};
      }
    }
    const auto* ma = dynamic_cast<const MaxAffineObjective*>(&f);
    if (!ma) throw DomainError("prox: piecewise objective must be max-affine");
    auto smooth = [&](const Vector& x) { return penalty_model(pen, geom, x); };
    auto residual = [&](const Vector&, const Vector& g) { return geom.dual_norm(g) / scale; };
    NewtonResult r = piecewise::smoothed(*ma, smooth, residual, x0, scale, tol);
    return {r.x, r.iterations};
  }
  if (!f.has_hessian()) throw DomainError("prox: smooth objective must provide a Hessian");
  auto eval = [&](const Vector& x) {
    LocalModel m = penalty_model(pen, geom, x);
    m.value += f.value(x);
    m.grad += f.gradient(x);
    m.hess += f.hessian(x);
    return m;
  };
  auto residual = [&](const Vector&, const Vector& g) { return geom.dual_norm(g) / scale; };
  NewtonResult r = minimize_newton(eval, residual, x0, NewtonOptions{500, tol});
  if (!r.converged) throw OracleFailure("prox: Newton did not reach tolerance", r.x, r.residual);
  return {r.x, r.iterations};
}

// Subgradient of f at x implied by stationarity of the penalized problem.
template <class Geometry>
Vector implied_subgradient(const Penalized& pen, const Geometry& geom, const Vector& x) {
  return -penalty_model(pen, geom, x).grad;
}

template <class Geometry>
double kkt_residual(const Objective& f, const Penalized& pen, const Geometry& geom, const Vector& x,
                    double scale) {
  if (f.tag() == SmoothnessTag::piecewise_linear_max) {
    const Vector g = implied_subgradient(pen, geom, x);
    if (const auto* cm = dynamic_cast<const CoordinateMaxObjective*>(&f))
      return piecewise::subgradient_residual(*cm, x, g) / scale;
    // Generic max-affine: compare with the sharply smoothed gradient.
    const auto& ma = dynamic_cast<const MaxAffineObjective&>(f);
    const Vector z = (ma.rows() * x + ma.offsets()) / (1e-9 * scale);
    const Vector w = (z.array() - z.maxCoeff()).exp().matrix();
    return geom.dual_norm(ma.rows().transpose() * (w / w.sum()) - g) / scale;
  }
  return geom.dual_norm(f.gradient(x) + penalty_model(pen, geom, x).grad) / scale;
}

// Solves the penalized problem, then enforces ‖x‖_p <= radius by a monotone
// search on the multiplier μ when the unconstrained solution violates it.
template <class Geometry>
ProxResult penalized_prox(const Objective& f, Penalized pen, const Geometry& geom,
                          std::optional<double> radius, double tol) {
  const Vector& c = *pen.center;
  require_finite(c, "prox center");
  require(c.size() == f.dim(), "prox: center dimension mismatch");
  const double p = geom.p();
  const double scale = gradient_scale(f, c, geom);
  InnerSolve s = solve_penalized(f, pen, geom, c, tol, scale);
  int iters = s.iterations;
  if (radius) {
    require(*radius > 0.0, "prox: radius must be positive");
    if constexpr (!std::is_same_v<Geometry, IdentityGeometry>)
      throw DomainError("prox: constrained mode needs plain coordinates");
    if (pnorm(s.x, p) > *radius * (1.0 + 1e-12)) {
      Vector warm = s.x;
      auto h = [&](double mu) {
        Penalized q = pen;
        q.mu = mu;
        InnerSolve t = solve_penalized(f, q, geom, warm, tol, scale);
        iters += t.iterations;
        warm = t.x;
        return std::log(*radius) - std::log(pnorm(t.x, p));
      };
      const double mu0 = scale / std::pow(*radius, p - 1.0);
      RootResult root = find_root_log(h, mu0, 1e-13);
      pen.mu = root.x;
      s = solve_penalized(f, pen, geom, warm, tol, scale);
      if (pnorm(s.x, p) > *radius * (1.0 + 1e-8))
        throw OracleFailure("prox: constraint multiplier search failed", s.x, root.fx);
    }
  }
  ProxResult out;
  out.x = s.x;
  out.inner_iterations = iters;
  out.multiplier = pen.mu;
  out.kkt_residual = kkt_residual(f, pen, geom, out.x, scale);
  out.subgradient = (f.tag() == SmoothnessTag::piecewise_linear_max)
                        ? implied_subgradient(pen, geom, out.x)
                        : Vector(f.gradient(out.x));
  return out;
}

}  // namespace detail

/// argmin_x f(x) + λ‖x - c‖_p^s (over ‖x‖_p <= radius when given).
template <class Geometry>
ProxResult solve_prox(const Objective& f, const ProxQuery& q, const Geometry& geom) {
  require(!q.params.is_ball(), "solve_prox: use solve_ball for the ball oracle");
  require(q.params.p == geom.p(), "solve_prox: geometry exponent mismatch");
  detail::Penalized pen{&q.center, q.params.s, q.params.lambda};
  ProxResult out = detail::penalized_prox(f, pen, geom, q.radius, q.tol);
  out.lambda_t = q.params.lambda * std::pow(geom.norm(out.x - q.center), q.params.s - q.params.p);
  return out;
}

inline ProxResult solve_prox(const Objective& f, const ProxQuery& q) {
  return solve_prox(f, q, IdentityGeometry(q.params.p));
}

/// argmin_x f(x) + λ_t ‖x - c‖_p^p; stationarity reads ∇f(x) = -λ_t p Φ(x - c).
template <class Geometry>
ProxResult solve_prox_ppower(const Objective& f, const Vector& center, double lambda_t, const Geometry& geom,
                             double tol = 1e-10, std::optional<double> radius = std::nullopt) {
  require(lambda_t > 0.0 && std::isfinite(lambda_t), "solve_prox_ppower: lambda_t must be positive");
  detail::Penalized pen{&center, geom.p(), lambda_t};
  ProxResult out = detail::penalized_prox(f, pen, geom, radius, tol);
  out.lambda_t = lambda_t;
  return out;
}

inline ProxResult solve_prox_ppower(const Objective& f, const Vector& center, double lambda_t, double p,
                                    double tol = 1e-10, std::optional<double> radius = std::nullopt) {
  return solve_prox_ppower(f, center, lambda_t, IdentityGeometry(p), tol, radius);
}

/// argmin f(x) over ‖x - c‖_p <= r (and ‖x‖_p <= outer_radius for the
/// structured max objectives).
inline BallResult solve_ball(const Objective& f, const Vector& center, double r, double p,
                             double tol = 1e-10, std::optional<double> outer_radius = std::nullopt) {
  require(r > 0.0 && std::isfinite(r), "solve_ball: radius must be positive");
  require_finite(center, "ball center");
  require(center.size() == f.dim(), "solve_ball: center dimension mismatch");
  const IdentityGeometry geom(p);
  BallResult out;
  if (f.tag() == SmoothnessTag::piecewise_linear_max) {
    const auto* cm = dynamic_cast<const CoordinateMaxObjective*>(&f);
    if (!cm) throw DomainError("solve_ball: piecewise objective must be coordinate-max");
    out.x = piecewise::ball(*cm, center, p, r);
    if (outer_radius && pnorm(out.x, p) > *outer_radius * (1.0 + 1e-12))
      throw OracleFailure("solve_ball: outer constraint active, unsupported", out.x, kInf);
    // On the moved coordinates the subgradient is μ|c - x|^{p-1}, with μ fixed
    // by the pieces' weights summing to β.
    const Vector v = out.x - center;
    const Vector ph = phi(v, p);
    const double mu = cm->beta() / (-ph.sum());
    out.subgradient = -mu * ph;
    out.at_boundary = true;
    out.lambda = dual_norm(out.subgradient, p) / std::pow(r, p - 1.0);
    out.kkt_residual = piecewise::subgradient_residual(*cm, out.x, out.subgradient);
    out.inner_iterations = 1;
    return out;
  }
  const double scale = detail::gradient_scale(f, center, geom);
  int iters = 0;
  Vector warm = center;
  // ‖x(μ) - c‖ decreases in μ for x(μ) = argmin f + (μ/p)‖x - c‖^p.
  auto solve_mu = [&](double mu) {
    detail::Penalized pen{&center, p, mu / p};
    detail::InnerSolve s = detail::solve_penalized(f, pen, geom, warm, tol, scale);
    iters += s.iterations;
    warm = s.x;
    return s.x;
  };
  auto h = [&](double mu) {
    const double dist = pnorm(solve_mu(mu) - center, p);
    return dist == 0.0 ? kInf : std::log(r) - std::log(dist);
  };
  const double mu0 = std::max(dual_norm(f.gradient(center), p), 1e-300) / std::pow(r, p - 1.0);
  // Interior check: a tiny multiplier already lands inside the ball.
  const double mu_small = mu0 * 1e-14;
  if (h(mu_small) >= 0.0 && f.has_hessian()) {
    auto eval = [&](const Vector& x) { return LocalModel{f.value(x), f.gradient(x), f.hessian(x)}; };
    auto residual = [&](const Vector&, const Vector& g) { return dual_norm(g, p) / scale; };
    NewtonResult nr = minimize_newton(eval, residual, warm, NewtonOptions{500, tol});
    iters += nr.iterations;
    if (nr.converged && pnorm(nr.x - center, p) <= r * (1.0 + 1e-9)) {
      out.x = nr.x;
      out.subgradient = f.gradient(out.x);
      out.at_boundary = false;
      out.lambda = 0.0;
      out.kkt_residual = nr.residual;
      out.inner_iterations = iters;
      return out;
    }
  }
  RootResult root = find_root_log(h, mu0, 1e-12);
  const Vector x = solve_mu(root.x);
  if (std::abs(pnorm(x - center, p) / r - 1.0) > 1e-8)
    throw OracleFailure("solve_ball: boundary multiplier search failed", x, root.fx);
  out.x = x;
  out.subgradient = f.gradient(x);
  out.at_boundary = true;
  out.lambda = dual_norm(out.subgradient, p) / std::pow(r, p - 1.0);
  const Vector stat = out.subgradient + out.lambda * phi(x - center, p);
  out.kkt_residual = dual_norm(stat, p) / scale;
  out.inner_iterations = iters;
  return out;
}

/// Regularization weight of the Taylor oracle: 2L / (p (s-1)!).
inline double taylor_weight(double L, double s, double p) {
  return 2.0 * L / (p * std::tgamma(s));
}

/// argmin_x f_{s-1}(x, c) + (2L / (p (s-1)!)) ‖x - c‖_p^s for integer s >= 2.
/// lambda_t reports (2L / (s-1)!) ‖x - c‖_p^{s-p}.
inline ProxResult solve_taylor(const Objective& f, const Vector& center, double L, double s, double p,
                               double tol = 1e-10) {
  require(L > 0.0 && std::isfinite(L), "solve_taylor: L must be positive");
  require(s >= 2.0 && s == std::floor(s), "solve_taylor: s must be an integer >= 2");
  require_finite(center, "taylor center");
  const int order = static_cast<int>(s) - 1;
  require(f.taylor_order() >= order, "solve_taylor: objective lacks the needed Taylor expansion");
  const IdentityGeometry geom(p);
  const double kappa = taylor_weight(L, s, p);
  const double scale = detail::gradient_scale(f, center, geom);
  auto eval = [&](const Vector& x) {
    LocalModel m = geom.penalty(x - center, s, kappa);
    m.value += f.taylor_value(x, center, order);
    m.grad += f.taylor_grad(x, center, order);
    m.hess += f.taylor_hessian(x, center, order);
    return m;
  };
  auto residual = [&](const Vector&, const Vector& g) { return dual_norm(g, p) / scale; };
  NewtonResult r = minimize_newton(eval, residual, center, NewtonOptions{500, tol});
  if (!r.converged) throw OracleFailure("solve_taylor: Newton did not reach tolerance", r.x, r.residual);
  ProxResult out;
  out.x = r.x;
  out.inner_iterations = r.iterations;
  out.kkt_residual = r.residual;
  out.subgradient = f.gradient(r.x);
  out.lambda_t = 2.0 * L / std::tgamma(s) * std::pow(pnorm(r.x - center, p), s - p);
  return out;
}

/// Recomputes the stationarity residual of a prox result from scratch.
template <class Geometry>
double certify_kkt(const Objective& f, const ProxResult& res, const ProxQuery& q, const Geometry& geom) {
  detail::Penalized pen{&q.center, q.params.s, q.params.lambda, res.multiplier};
  return detail::kkt_residual(f, pen, geom, res.x, detail::gradient_scale(f, q.center, geom));
}

inline double certify_kkt(const Objective& f, const ProxResult& res, const ProxQuery& q) {
  return certify_kkt(f, res, q, IdentityGeometry(q.params.p));
}

}  // namespace lpacc
