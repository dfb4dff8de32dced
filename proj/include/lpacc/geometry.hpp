#pragma once

#include "lpacc/core.hpp"
#include "lpacc/newton.hpp"
#include "lpacc/pnorm.hpp"

#include <memory>

namespace lpacc {

/// Derivatives of ρ‖u‖_p^e in the coordinates u, kept in factored form
/// Hessian = diag(diag) + rank1_scale · dir dirᵀ so that pulling back through
/// a tall matrix stays O(n d²).
struct PenaltyDerivatives {
  double value = 0.0;
  Vector grad;
  Vector diag;
  Vector dir;
  double rank1_scale = 0.0;
};

inline PenaltyDerivatives penalty_derivatives(const Vector& u, double p, double e, double rho) {
  PenaltyDerivatives out;
  const Index n = u.size();
  out.grad = Vector::Zero(n);
  out.diag = Vector::Zero(n);
  out.dir = Vector::Zero(n);
  const double N = pnorm(u, p);
  if (N == 0.0) {
    if (e == 2.0 && p == 2.0) out.diag.setConstant(2.0 * rho);
    return out;
  }
  const Vector ph = phi(u, p);
  out.value = rho * std::pow(N, e);
  out.grad = rho * e * std::pow(N, e - p) * ph;
  const double dscale = rho * e * (p - 1.0) * std::pow(N, e - p);
  for (Index i = 0; i < n; ++i) {
    out.diag[i] = dscale * ((p == 2.0) ? 1.0 : std::pow(std::abs(u[i]), p - 2.0));
  }
  // Φ(u)/N^{p-1} has unit dual norm, which keeps the rank-one term bounded.
  out.dir = ph / std::pow(N, p - 1.0);
  out.rank1_scale = rho * e * (e - p) * std::pow(N, e - 2.0);
  return out;
}

/// Plain coordinates: norms ‖v‖_p and the closed-form mirror step.
class IdentityGeometry {
 public:
  explicit IdentityGeometry(double p) : p_(p) { require(p >= 2.0, "geometry: p must be >= 2"); }

  double p() const { return p_; }
  double norm(const Vector& v) const { return pnorm(v, p_); }
  double dual_norm(const Vector& g) const { return lpacc::dual_norm(g, p_); }
  double omega(const Vector& x, const Vector& y) const { return bregman_omega_p(x, y, p_); }
  const Vector& image(const Vector& v) const { return v; }

  /// argmin_z ⟨w, z⟩ + ω_p(z, y0).
  Vector mirror_step(const Vector& w, const Vector& y0) const {
    require_same_dim(w, y0, "mirror_step");
    const Vector u = p_ * phi(y0, p_) - w;
    return phi_inverse(u / p_, p_);
  }

  /// Value, gradient and Hessian of ρ‖v‖_p^e.
  LocalModel penalty(const Vector& v, double e, double rho) const {
    PenaltyDerivatives d = penalty_derivatives(v, p_, e, rho);
    LocalModel m;
    m.value = d.value;
    m.grad = std::move(d.grad);
    m.hess = d.diag.asDiagonal();
    m.hess.noalias() += d.rank1_scale * d.dir * d.dir.transpose();
    return m;
  }

 private:
  double p_;
};

/// Coordinates seen through a full-column-rank map M: norms ‖M v‖_p and
/// Bregman divergences ω_p(M x, M y).
class LinearMapGeometry {
 public:
  LinearMapGeometry(std::shared_ptr<const Matrix> m, double p) : m_(std::move(m)), p_(p) {
    require(p >= 2.0, "geometry: p must be >= 2");
    require(m_ && m_->rows() >= m_->cols(), "geometry: map must be tall");
    gram_ = m_->transpose() * *m_;
    gram_ldlt_.compute(gram_);
    require(gram_ldlt_.info() == Eigen::Success, "geometry: map must have full column rank");
  }

  double p() const { return p_; }
  const Matrix& map() const { return *m_; }
  const Matrix& gram() const { return gram_; }
  Vector image(const Vector& v) const { return *m_ * v; }
  double norm(const Vector& v) const { return pnorm(*m_ * v, p_); }

  /// Dual norm of g; exact for p = 2, otherwise the ℓ_q norm of the
  /// least-squares preimage, which upper-bounds it.
  double dual_norm(const Vector& g) const {
    const Vector y = gram_ldlt_.solve(g);
    if (p_ == 2.0) return std::sqrt(std::max(0.0, g.dot(y)));
    return lpacc::dual_norm(*m_ * y, p_);
  }

  double omega(const Vector& x, const Vector& y) const {
    return bregman_omega_p(*m_ * x, *m_ * y, p_);
  }

  Vector mirror_step(const Vector& w, const Vector& y0) const {
    require_same_dim(w, y0, "mirror_step");
    if (p_ == 2.0) return y0 - 0.5 * gram_ldlt_.solve(w);
    const Vector anchor = m_->transpose() * (p_ * phi(*m_ * y0, p_)) - w;
    auto eval = [&](const Vector& z) {
      const Vector u = *m_ * z;
      LocalModel lm;
      lm.value = pnorm_pow(u, p_) - anchor.dot(z);
      lm.grad = m_->transpose() * (p_ * phi(u, p_)) - anchor;
      Vector d(u.size());
      for (Index i = 0; i < u.size(); ++i) d[i] = p_ * (p_ - 1.0) * std::pow(std::abs(u[i]), p_ - 2.0);
      lm.hess = m_->transpose() * d.asDiagonal() * *m_;
      return lm;
    };
    const double scale = std::max(1.0, dual_norm(anchor));
    auto residual = [&](const Vector&, const Vector& g) { return dual_norm(g) / scale; };
    NewtonResult r = minimize_newton(eval, residual, y0, NewtonOptions{300, 1e-13});
    if (!r.converged) throw OracleFailure("mirror_step: Newton did not converge", r.x, r.residual);
    return r.x;
  }

  LocalModel penalty(const Vector& v, double e, double rho) const {
    PenaltyDerivatives d = penalty_derivatives(*m_ * v, p_, e, rho);
    LocalModel m;
    m.value = d.value;
    m.grad = m_->transpose() * d.grad;
    m.hess = m_->transpose() * d.diag.asDiagonal() * *m_;
    const Vector md = m_->transpose() * d.dir;
    m.hess.noalias() += d.rank1_scale * md * md.transpose();
    return m;
  }

 private:
  std::shared_ptr<const Matrix> m_;
  double p_;
  Matrix gram_;
  Eigen::LDLT<Matrix> gram_ldlt_;
};

}  // namespace lpacc
