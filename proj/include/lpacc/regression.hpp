#pragma once

#include "lpacc/accel.hpp"
#include "lpacc/core.hpp"
#include "lpacc/geometry.hpp"
#include "lpacc/newton.hpp"
#include "lpacc/objective.hpp"
#include "lpacc/oracle.hpp"
#include "lpacc/pnorm.hpp"
#include "lpacc/roots.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

namespace lpacc {

/// min_x ‖Ax - b‖_s^s.
struct RegressionInstance {
  std::shared_ptr<const Matrix> A;
  Vector b;
  double s = 4.0;
  double epsilon = 1e-4;

  Index n() const { return A->rows(); }
  Index d() const { return A->cols(); }
  double objective(const Vector& x) const { return pnorm_pow(*A * x - b, s); }
};

inline RegressionInstance make_regression(Matrix A, Vector b, double s, double epsilon) {
  require(A.rows() >= A.cols() && A.cols() >= 1, "regression: need n >= d >= 1");
  require(b.size() == A.rows(), "regression: A and b dimensions differ");
  require(A.allFinite() && b.allFinite(), "regression: A and b must be finite");
  for (Index j = 0; j < A.cols(); ++j)
    require(A.col(j).cwiseAbs().maxCoeff() > 0.0, "regression: column " + std::to_string(j) + " of A is zero");
  require(s >= 2.0 && std::isfinite(s), "regression: s must be >= 2");
  require(epsilon > 0.0, "regression: epsilon must be positive");
  return RegressionInstance{std::make_shared<const Matrix>(std::move(A)), std::move(b), s, epsilon};
}

struct LeastSquaresResult {
  Vector x;
  bool rank_deficient = false;
};

/// argmin ‖Ax - b‖_2 (minimum-norm when A is rank deficient).
inline LeastSquaresResult least_squares_init(const Matrix& A, const Vector& b) {
  require(b.size() == A.rows(), "least_squares_init: A and b dimensions differ");
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(A);
  LeastSquaresResult out;
  out.x = cod.solve(b);
  out.rank_deficient = cod.rank() < A.cols();
  return out;
}

/// Projection onto {y : Aᵀy = 0}.
class NullSpaceProjector {
 public:
  explicit NullSpaceProjector(const Matrix& A) : A_(&A), qr_(A) {}
  Vector operator()(const Vector& w) const { return w - *A_ * qr_.solve(w); }

 private:
  const Matrix* A_;
  Eigen::ColPivHouseholderQR<Matrix> qr_;
};

/// Fenchel lower bound on min ‖Ax - b‖_s^s from the residual v = Ax - b:
/// with y the projection of |v|^{s-2} v onto null(Aᵀ), ⟨y, v⟩ = -⟨y, b⟩ and
/// Hölder give ‖Ax' - b‖_s >= ⟨y, v⟩/‖y‖_{s'} for every x'.
inline double regression_lower_bound(const RegressionInstance& inst, const Vector& x,
                                     const NullSpaceProjector& proj) {
  const Vector v = *inst.A * x - inst.b;
  const Vector y = proj(phi(v, inst.s));
  const double num = y.dot(v);
  const double den = dual_norm(y, inst.s);
  if (!(num > 0.0) || !(den > 0.0)) return 0.0;
  return std::pow(num / den, inst.s);
}

/// res(Δ) = g̃ᵀAΔ + (AΔ)ᵀ diag(R̃) AΔ + ‖AΔ‖_s^s.
struct ResidualProblem {
  Vector gtilde;
  Vector Rtilde;
  std::shared_ptr<const Matrix> A;
  double s = 4.0;
};

/// g̃ = |v|^{s-2} v and R̃ = 2|v|^{s-2} for v = Ax - b.
inline ResidualProblem build_residual(const RegressionInstance& inst, const Vector& x) {
  const Vector v = *inst.A * x - inst.b;
  ResidualProblem r;
  r.A = inst.A;
  r.s = inst.s;
  r.gtilde.resize(v.size());
  r.Rtilde.resize(v.size());
  for (Index i = 0; i < v.size(); ++i) {
    const double w = (inst.s == 2.0) ? 1.0 : std::pow(std::abs(v[i]), inst.s - 2.0);
    r.gtilde[i] = w * v[i];
    r.Rtilde[i] = 2.0 * w;
  }
  return r;
}

inline double residual_objective(const ResidualProblem& res, const Vector& delta) {
  const Vector u = *res.A * delta;
  return res.gtilde.dot(u) + res.Rtilde.dot(u.cwiseAbs2()) + pnorm_pow(u, res.s);
}

/// Scalar piece h_i(u) = g u + R u² + |u|^s and its derivatives.
struct ResidualPiece {
  double g, R, s;
  double value(double u) const { return g * u + R * u * u + std::pow(std::abs(u), s); }
  double deriv(double u) const { return g + 2.0 * R * u + s * signed_pow(u, s); }
  double second(double u) const { return 2.0 * R + s * (s - 1.0) * std::pow(std::abs(u), s - 2.0); }
  /// h*(y) = sup_u y u - h(u); the maximizer solves h'(u) = y.
  double conjugate(double y) const {
    const double target = y;
    auto hp = [&](double u) { return deriv(u) - target; };
    double lo = -1.0, hi = 1.0;
    while (hp(lo) > 0.0) lo *= 2.0;
    while (hp(hi) < 0.0) hi *= 2.0;
    double u = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
      const double f = hp(u);
      if (f == 0.0) break;
      (f > 0.0 ? hi : lo) = u;
      const double h2 = second(u);
      double next = (h2 > 0.0) ? u - f / h2 : 0.5 * (lo + hi);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (std::abs(next - u) <= 1e-16 * std::max(1.0, std::abs(u))) {
        u = next;
        break;
      }
      u = next;
    }
    return y * u - value(u);
  }
};

/// Lower bound on min_Δ res(Δ) by Fenchel duality: with y the projection of
/// ∇h(AΔ) onto null(Aᵀ), res(Δ') >= ⟨y, AΔ'⟩ - h*(y) = -h*(y).
inline double residual_lower_bound(const ResidualProblem& res, const Vector& delta, const NullSpaceProjector& proj) {
  const Vector u = *res.A * delta;
  Vector grad(u.size());
  for (Index i = 0; i < u.size(); ++i) grad[i] = ResidualPiece{res.gtilde[i], res.Rtilde[i], res.s}.deriv(u[i]);
  const Vector y = proj(grad);
  double sum = 0.0;
  for (Index i = 0; i < u.size(); ++i) sum += ResidualPiece{res.gtilde[i], res.Rtilde[i], res.s}.conjugate(y[i]);
  return std::min(0.0, -sum);
}

/// Diagonal weights D with ∇²res(Δ) = Aᵀ diag(D) A.
inline Vector residual_curvature(const ResidualProblem& res, const Vector& u) {
  Vector D(u.size());
  for (Index i = 0; i < u.size(); ++i) D[i] = ResidualPiece{res.gtilde[i], res.Rtilde[i], res.s}.second(u[i]);
  return D;
}

/// The residual problem as an objective of Δ.
class ResidualObjective final : public Objective {
 public:
  explicit ResidualObjective(ResidualProblem res) : res_(std::move(res)) {}
  const ResidualProblem& problem() const { return res_; }
  Index dim() const override { return res_.A->cols(); }
  double value(const Vector& x) const override {
    check(x);
    return residual_objective(res_, x);
  }
  Vector gradient(const Vector& x) const override {
    check(x);
    return res_.A->transpose() * image_gradient(*res_.A * x);
  }
  bool has_hessian() const override { return true; }
  Matrix hessian(const Vector& x) const override {
    check(x);
    return res_.A->transpose() * residual_curvature(res_, *res_.A * x).asDiagonal() * *res_.A;
  }
  SmoothnessTag tag() const override { return SmoothnessTag::composite_regression; }

  Vector image_gradient(const Vector& u) const {
    Vector g(u.size());
    for (Index i = 0; i < u.size(); ++i) g[i] = ResidualPiece{res_.gtilde[i], res_.Rtilde[i], res_.s}.deriv(u[i]);
    return g;
  }

 private:
  ResidualProblem res_;
};

/// ‖Ax - b‖_s^s as an objective of x.
class RegressionObjective final : public Objective {
 public:
  explicit RegressionObjective(RegressionInstance inst) : inst_(std::move(inst)) {}
  Index dim() const override { return inst_.d(); }
  double value(const Vector& x) const override {
    check(x);
    return inst_.objective(x);
  }
  Vector gradient(const Vector& x) const override {
    check(x);
    return inst_.A->transpose() * (inst_.s * phi(*inst_.A * x - inst_.b, inst_.s));
  }
  bool has_hessian() const override { return true; }
  Matrix hessian(const Vector& x) const override {
    check(x);
    const Vector v = *inst_.A * x - inst_.b;
    Vector D(v.size());
    for (Index i = 0; i < v.size(); ++i)
      D[i] = inst_.s * (inst_.s - 1.0) * std::pow(std::abs(v[i]), inst_.s - 2.0);
    return inst_.A->transpose() * D.asDiagonal() * *inst_.A;
  }
  SmoothnessTag tag() const override { return SmoothnessTag::composite_regression; }

 private:
  RegressionInstance inst_;
};

/// argmin_x gᵀx + ‖diag(Rw)^{1/2} A x‖_2^2 + ‖diag(W) A x‖_p^p, to dual
/// gradient residual <= tol·‖g‖ (Newton with Levenberg safeguarding).
inline Vector solve_smoothed_pnorm(const Vector& g, const Vector& Rw, const Vector& W, const Matrix& A, double p,
                                   double tol, int* iterations = nullptr) {
  require(p >= 2.0, "solve_smoothed_pnorm: p must be >= 2");
  require(g.size() == A.cols() && Rw.size() == A.rows() && W.size() == A.rows(),
          "solve_smoothed_pnorm: dimension mismatch");
  require(Rw.minCoeff() >= 0.0 && W.minCoeff() >= 0.0, "solve_smoothed_pnorm: weights must be >= 0");
  const double gnorm = g.norm();
  if (gnorm == 0.0) {
    if (iterations) *iterations = 0;
    return Vector::Zero(A.cols());
  }
  const Vector Wp = W.array().pow(p).matrix();
  auto eval = [&](const Vector& x) {
    const Vector u = A * x;
    LocalModel m;
    Vector dg(u.size()), dh(u.size());
    double val = g.dot(x);
    for (Index i = 0; i < u.size(); ++i) {
      const double a = std::abs(u[i]);
      val += Rw[i] * u[i] * u[i] + Wp[i] * std::pow(a, p);
      dg[i] = 2.0 * Rw[i] * u[i] + p * Wp[i] * signed_pow(u[i], p);
      dh[i] = 2.0 * Rw[i] + p * (p - 1.0) * Wp[i] * ((p == 2.0) ? 1.0 : std::pow(a, p - 2.0));
    }
    m.value = val;
    m.grad = g + A.transpose() * dg;
    m.hess = A.transpose() * dh.asDiagonal() * A;
    return m;
  };
  auto residual = [&](const Vector&, const Vector& gr) { return gr.norm() / gnorm; };
  NewtonResult r = minimize_newton(eval, residual, Vector::Zero(A.cols()), NewtonOptions{500, tol});
  if (iterations) *iterations = r.iterations;
  if (!r.converged) throw OracleFailure("solve_smoothed_pnorm: Newton did not reach tolerance", r.x, r.residual);
  return r.x;
}

/// min_x dᵀx + ‖x - c‖²_metric + λ_t ‖A(x - c)‖_p^p.
struct SubproblemSpec {
  Vector d;
  Vector c;
  Matrix metric;
  double lambda_t = 0.0;
  double p = 2.0;
};

inline Vector solve_subproblem(const SubproblemSpec& sp, const Matrix& A, double tol = 1e-12) {
  require(sp.p >= 2.0 && sp.lambda_t >= 0.0, "solve_subproblem: need p >= 2 and lambda_t >= 0");
  require(sp.metric.rows() == sp.d.size() && sp.metric.cols() == sp.d.size() && sp.c.size() == sp.d.size() &&
              A.cols() == sp.d.size(),
          "solve_subproblem: dimension mismatch");
  const Matrix M = 0.5 * (sp.metric + sp.metric.transpose());
  const double min_eig = Eigen::SelfAdjointEigenSolver<Matrix>(M, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
  require(min_eig >= -1e-10 * std::max(1.0, M.cwiseAbs().maxCoeff()), "solve_subproblem: metric is not PSD");
  const double gnorm = std::max(sp.d.norm(), 1e-300);
  auto eval = [&](const Vector& v) {
    const PenaltyDerivatives pd = penalty_derivatives(A * v, sp.p, sp.p, sp.lambda_t);
    LocalModel m;
    m.value = sp.d.dot(v) + v.dot(M * v) + pd.value;
    m.grad = sp.d + 2.0 * M * v + A.transpose() * pd.grad;
    m.hess = 2.0 * M + A.transpose() * pd.diag.asDiagonal() * A;
    return m;
  };
  auto residual = [&](const Vector&, const Vector& g) { return g.norm() / gnorm; };
  NewtonResult r = minimize_newton(eval, residual, Vector::Zero(sp.d.size()), NewtonOptions{500, tol});
  if (!r.converged) throw OracleFailure("solve_subproblem: Newton did not reach tolerance", sp.c + r.x, r.residual);
  return sp.c + r.x;
}

/// C_s = e·s^s, the regularizer scale that makes f_y relatively smooth.
inline double relative_smoothness_constant(double s) { return std::numbers::e * std::pow(s, s); }

/// Hessian of C‖A v‖_p^s in v.
inline Matrix pnorm_power_hessian(const Matrix& A, const Vector& v, double p, double s, double C) {
  const PenaltyDerivatives d = penalty_derivatives(A * v, p, s, C);
  Matrix h = A.transpose() * d.diag.asDiagonal() * A;
  const Vector md = A.transpose() * d.dir;
  h.noalias() += d.rank1_scale * md * md.transpose();
  return h;
}

/// ∇²f_y(x) for f_y = res + C‖A(· - y)‖_p^s.
inline Matrix prox_objective_hessian(const ResidualObjective& f, const Vector& x, const Vector& y, double p,
                                     double C) {
  return f.hessian(x) + pnorm_power_hessian(*f.problem().A, x - y, p, f.problem().s, C);
}

/// ∇²h_y(x) for h_y = ½‖· - y‖²_{∇²res(y)} + C‖A(· - y)‖_p^s.
inline Matrix reference_hessian(const ResidualObjective& f, const Vector& x, const Vector& y, double p, double C) {
  return f.hessian(y) + pnorm_power_hessian(*f.problem().A, x - y, p, f.problem().s, C);
}

struct RelSmoothOptions {
  /// Relative dual-gradient tolerance on f_y.
  double tol = 1e-10;
  /// Relative-smoothness constants of f_y w.r.t. h_y.
  double L = std::numbers::e;
  double mu = 1.0 / std::numbers::e;
  /// 0 means ⌈(L/μ) log(1/tol)⌉.
  int max_steps = 0;
};

struct RelSmoothResult {
  Vector x;
  int steps = 0;
  int subproblem_solves = 0;
  double residual = kInf;
  bool converged = false;
};

/// argmin_x res(x) + C‖A(x - y)‖_p^s by the relatively smooth gradient method
/// with reference h_y. Each step solves
///   min_v dᵀv + (L/2) vᵀ H v + L C ‖A v‖_p^s,   v = x - y,
/// through a scalar fixed point on t = ‖A v‖_p: for fixed t the s-power term
/// is replaced by κ‖Av‖_p^p with κ = L C (s/p) t^{s-p}, a smoothed p-norm
/// problem.
inline RelSmoothResult prox_via_relative_smoothness(const ResidualObjective& f, const Vector& y, double p, double C,
                                                    const RelSmoothOptions& opt = {}) {
  const ResidualProblem& res = f.problem();
  const Matrix& A = *res.A;
  const double s = res.s;
  require(p >= 2.0 && s > p - 1e-12, "prox_via_relative_smoothness: need s >= p >= 2");
  require(C > 0.0, "prox_via_relative_smoothness: C must be positive");
  const double L = opt.L;
  const int max_steps = opt.max_steps > 0 ? opt.max_steps
                                          : static_cast<int>(std::ceil(L / opt.mu * std::log(1.0 / opt.tol)));
  const Vector D = residual_curvature(res, A * y);
  const Matrix H = A.transpose() * D.asDiagonal() * A;
  const Matrix G = A.transpose() * A;
  const double a_s = C;

  auto grad_fy = [&](const Vector& x) {
    const Vector v = x - y;
    const PenaltyDerivatives pd = penalty_derivatives(A * v, p, s, a_s);
    return Vector(f.gradient(x) + A.transpose() * pd.grad);
  };
  auto grad_h = [&](const Vector& x) {
    const Vector v = x - y;
    const PenaltyDerivatives pd = penalty_derivatives(A * v, p, s, a_s);
    return Vector(H * v + A.transpose() * pd.grad);
  };

  RelSmoothResult out;
  out.x = y;
  const double g0 = grad_fy(y).norm();
  if (g0 == 0.0) {
    out.residual = 0.0;
    out.converged = true;
    return out;
  }
  double t_guess = 0.0;
  for (int k = 0; k < max_steps; ++k) {
    const Vector gk = grad_fy(out.x);
    out.residual = gk.norm() / g0;
    if (out.residual <= opt.tol) {
      out.converged = true;
      return out;
    }
    const Vector dvec = gk - L * grad_h(out.x);
    // v(t) for a trial t = ‖Av‖_p.
    auto solve_for = [&](double t) -> Vector {
      const double kappa = L * a_s * (s / p) * std::pow(t, s - p);
      ++out.subproblem_solves;
      if (p == 2.0) {
        Matrix M = L * H + 2.0 * kappa * G;
        Eigen::LDLT<Matrix> ldlt(M);
        return ldlt.solve(-dvec);
      }
      const Vector Rw = 0.5 * L * D;
      const Vector W = Vector::Constant(A.rows(), std::pow(kappa, 1.0 / p));
      return solve_smoothed_pnorm(dvec, Rw, W, A, p, 1e-13);
    };
    Vector v;
    if (s == p) {
      v = solve_for(1.0);
    } else {
      auto h = [&](double t) {
        const double n = pnorm(A * solve_for(t), p);
        return n == 0.0 ? kInf : std::log(t) - std::log(n);
      };
      if (!(t_guess > 0.0)) t_guess = std::max(pnorm(A * (out.x - y), p), 1e-8 * std::max(1.0, pnorm(A * y, p)));
      const RootResult root = find_root_log(h, t_guess, 1e-13, 400);
      t_guess = root.x;
      v = solve_for(root.x);
    }
    out.x = y + v;
    out.steps = k + 1;
  }
  out.residual = grad_fy(out.x).norm() / g0;
  out.converged = out.residual <= opt.tol;
  return out;
}

struct ResidualSolveOptions {
  double p = 2.0;
  /// λ of the ℓ_p^s prox oracle; 0 means C_s.
  double lambda = 0.0;
  /// 0 means 20·p·n^{(s-p)/(s(p+1)-p)}·log(n).
  int max_iterations = 0;
  double ls_tol = 1e-3;
  RelSmoothOptions prox;
  /// Start from the smoothed p-norm solution (W = I) instead of Δ = 0.
  bool warm_start = true;
  /// Realize the prox with the generic oracle-module solver instead.
  bool generic_oracle = false;
};

struct ResidualSolveResult {
  Vector delta;
  double value = 0.0;
  double lower_bound = 0.0;
  bool certified = false;
  int iterations = 0;
  int oracle_calls = 0;
  int inner_solves = 0;
  RunStatus status = RunStatus::completed;
  std::string message;
  std::vector<IterationRecord> records;
};

inline int residual_iteration_budget(Index n, double p, double s) {
  const double e = (s - p) / (s * (p + 1.0) - p);
  return static_cast<int>(std::ceil(20.0 * p * std::pow(static_cast<double>(n), e) * std::log(std::max<double>(n, 3))));
}

/// Minimizes res(Δ) with the line-searched prox method in the geometry of
/// ‖AΔ‖_p until the duality certificate proves res(Δ) <= res*/2.
inline ResidualSolveResult solve_residual_2approx(const ResidualProblem& res, const ResidualSolveOptions& opt = {},
                                                  const NullSpaceProjector* projector = nullptr) {
  const double p = opt.p, s = res.s;
  require(p >= 2.0 && p < s, "solve_residual_2approx: need 2 <= p < s");
  const Matrix& A = *res.A;
  std::unique_ptr<NullSpaceProjector> own;
  if (!projector) {
    own = std::make_unique<NullSpaceProjector>(A);
    projector = own.get();
  }
  const ResidualObjective f(res);
  const LinearMapGeometry geom(res.A, p);
  const double lambda = opt.lambda > 0.0 ? opt.lambda : relative_smoothness_constant(s);
  ResidualSolveResult out;
  if (res.gtilde.cwiseAbs().maxCoeff() == 0.0) {
    out.delta = Vector::Zero(A.cols());
    out.certified = true;
    out.status = RunStatus::converged;
    return out;
  }
  Vector x0 = Vector::Zero(A.cols());
  if (opt.warm_start) {
    x0 = solve_smoothed_pnorm(A.transpose() * res.gtilde, res.Rtilde, Vector::Ones(A.rows()), A, p, 1e-12);
    ++out.inner_solves;
    if (!(f.value(x0) < 0.0)) x0.setZero();
  }
  auto certified = [&](const Vector& delta, double* value, double* lb) {
    *value = f.value(delta);
    *lb = residual_lower_bound(res, delta, *projector);
    return *value < 0.0 && *value <= 0.5 * *lb;
  };

  int inner = 0;
  auto step = [&](const Vector& y, double) {
    StepOutcome o;
    if (opt.generic_oracle) {
      ProxQuery q{y, PNormParams::finite(p, s, lambda), std::nullopt, opt.prox.tol};
      ProxResult r = solve_prox(f, q, geom);
      inner += r.inner_iterations;
      o.x = std::move(r.x);
    } else {
      RelSmoothResult r = prox_via_relative_smoothness(f, y, p, lambda, opt.prox);
      inner += r.subproblem_solves;
      o.inner_iterations = r.steps;
      o.x = std::move(r.x);
    }
    const double n = geom.norm(o.x - y);
    o.implied_lambda = (n == 0.0) ? 0.0 : (s / p) * lambda * std::pow(n, s - p);
    o.grad = f.gradient(o.x);
    return o;
  };
  auto annotate = [](IterationRecord&, const LineSearchResult&) { return true; };
  double value = 0.0, lb = 0.0;
  auto stop = [&](const AccelState& st) { return certified(st.x, &value, &lb); };

  RunOptions ro;
  ro.max_iterations = opt.max_iterations > 0 ? opt.max_iterations : residual_iteration_budget(A.rows(), p, s);
  ro.ls_tol = opt.ls_tol;
  const double guess = lambda * std::pow(std::max(geom.norm(x0), 1e-3), s - p);
  RunResult run = detail::run_line_searched(f, x0, p, guess, geom, ro, step, annotate, stop);
  out.delta = run.state.x;
  out.certified = certified(out.delta, &value, &lb);
  out.value = value;
  out.lower_bound = lb;
  out.iterations = static_cast<int>(run.records.size());
  for (const auto& r : run.records) out.oracle_calls += r.oracle_calls;
  out.inner_solves += inner;
  out.records = std::move(run.records);
  out.message = run.message;
  if (run.status == RunStatus::oracle_failure || run.status == RunStatus::line_search_failure)
    out.status = run.status;
  else
    out.status = out.certified ? RunStatus::converged : RunStatus::budget_exhausted;
  return out;
}

/// argmin_{η >= 0} ‖v + η u‖_s^s.
inline double exact_step(const Vector& v, const Vector& u, double s) {
  auto dphi = [&](double eta) {
    double acc = 0.0;
    for (Index i = 0; i < v.size(); ++i) acc += signed_pow(v[i] + eta * u[i], s) * u[i];
    return acc;
  };
  if (dphi(0.0) >= 0.0) return 0.0;
  double hi = 1.0;
  while (dphi(hi) < 0.0 && hi < 1e300) hi *= 2.0;
  return bisect_increasing(dphi, 0.0, hi);
}

struct CycleRecord {
  int cycle = 0;
  double objective = 0.0;
  double lower_bound = 0.0;
  double eta = 0.0;
  double residual_value = 0.0;
  double residual_lower_bound = 0.0;
  bool residual_certified = false;
  int iterations = 0;
  int oracle_calls = 0;
  int inner_solves = 0;
};

inline nlohmann::ordered_json to_json(const CycleRecord& c) {
  nlohmann::ordered_json j;
  j["cycle"] = c.cycle;
  j["objective"] = c.objective;
  j["lower_bound"] = c.lower_bound;
  j["eta"] = c.eta;
  j["residual_value"] = c.residual_value;
  j["residual_lower_bound"] = c.residual_lower_bound;
  j["residual_certified"] = c.residual_certified;
  j["iterations"] = c.iterations;
  j["oracle_calls"] = c.oracle_calls;
  j["inner_solves"] = c.inner_solves;
  return j;
}

struct RefinementOptions {
  ResidualSolveOptions residual;
  /// 0 means ⌈50 s² log(n/ε)⌉.
  int max_cycles = 0;
};

struct RefinementReport {
  Vector x;
  double objective = 0.0;
  double lower_bound = 0.0;
  RunStatus status = RunStatus::completed;
  std::string message;
  std::vector<CycleRecord> cycles;
  int residual_calls = 0;
  int total_iterations = 0;
  int total_oracle_calls = 0;
  int total_inner_solves = 0;
  bool rank_deficient = false;
};

inline int refinement_budget(const RegressionInstance& inst) {
  return static_cast<int>(std::ceil(50.0 * inst.s * inst.s * std::log(inst.n() / inst.epsilon)));
}

/// Iterative refinement from the least-squares point: each cycle solves a
/// residual problem to a certified factor 2, then moves x ← x + ηΔ with the
/// exact line minimizer η. Stops once ‖Ax - b‖_s^s <= (1+ε)·(dual lower bound).
inline RefinementReport iterative_refinement(const RegressionInstance& inst, const RefinementOptions& opt = {}) {
  RefinementReport rep;
  const LeastSquaresResult ls = least_squares_init(*inst.A, inst.b);
  rep.x = ls.x;
  rep.rank_deficient = ls.rank_deficient;
  const NullSpaceProjector proj(*inst.A);
  rep.objective = inst.objective(rep.x);
  rep.lower_bound = regression_lower_bound(inst, rep.x, proj);
  rep.cycles.push_back(CycleRecord{0, rep.objective, rep.lower_bound});
  const int budget = opt.max_cycles > 0 ? opt.max_cycles : refinement_budget(inst);
  auto done = [&]() { return rep.objective <= (1.0 + inst.epsilon) * rep.lower_bound; };
  if (done()) {
    rep.status = RunStatus::converged;
    return rep;
  }
  {
    // b in the range of A: the residual is rounding noise of |A||x| + |b|.
    const Vector v = *inst.A * rep.x - inst.b;
    const Vector noise = inst.A->cwiseAbs() * rep.x.cwiseAbs() + inst.b.cwiseAbs();
    if ((v.cwiseAbs().array() <= 64.0 * std::numeric_limits<double>::epsilon() * noise.array()).all()) {
      rep.status = RunStatus::converged;
      rep.message = "b lies in the range of A";
      return rep;
    }
  }
  for (int c = 1; c <= budget; ++c) {
    const ResidualProblem res = build_residual(inst, rep.x);
    ResidualSolveResult sol;
    try {
      sol = solve_residual_2approx(res, opt.residual, &proj);
    } catch (const OracleFailure& e) {
      rep.status = RunStatus::oracle_failure;
      rep.message = e.what();
      return rep;
    }
    ++rep.residual_calls;
    rep.total_iterations += sol.iterations;
    rep.total_oracle_calls += sol.oracle_calls;
    rep.total_inner_solves += sol.inner_solves;
    if (sol.status == RunStatus::oracle_failure || sol.status == RunStatus::line_search_failure) {
      rep.status = sol.status;
      rep.message = "cycle " + std::to_string(c) + ": " + sol.message;
      return rep;
    }
    const Vector v = *inst.A * rep.x - inst.b;
    const Vector u = *inst.A * sol.delta;
    const double eta = exact_step(v, u, inst.s);
    const Vector x_next = rep.x + eta * sol.delta;
    const double f_next = inst.objective(x_next);
    CycleRecord cr;
    cr.cycle = c;
    cr.eta = eta;
    cr.residual_value = sol.value;
    cr.residual_lower_bound = sol.lower_bound;
    cr.residual_certified = sol.certified;
    cr.iterations = sol.iterations;
    cr.oracle_calls = sol.oracle_calls;
    cr.inner_solves = sol.inner_solves;
    if (!(f_next < rep.objective)) {
      cr.objective = rep.objective;
      cr.lower_bound = rep.lower_bound;
      rep.cycles.push_back(cr);
      // No decrease along a descent direction means x is optimal to rounding.
      rep.status = RunStatus::converged;
      rep.message = "refinement step made no progress";
      return rep;
    }
    rep.x = x_next;
    rep.objective = f_next;
    rep.lower_bound = std::max(rep.lower_bound, regression_lower_bound(inst, rep.x, proj));
    cr.objective = rep.objective;
    cr.lower_bound = rep.lower_bound;
    rep.cycles.push_back(cr);
    if (done()) {
      rep.status = RunStatus::converged;
      return rep;
    }
  }
  rep.status = RunStatus::budget_exhausted;
  rep.message = "cycle budget exhausted";
  return rep;
}

}  // namespace lpacc
