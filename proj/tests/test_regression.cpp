#include "lpacc/bench.hpp"
#include "lpacc/reference.hpp"
#include "lpacc/regression.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace lpacc;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

Matrix gaussian_matrix(int n, int d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N(0.0, 1.0);
  Matrix A(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) A(i, j) = N(rng);
  return A;
}

Vector gaussian(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return gaussian_vector(rng, n);
}

ResidualProblem residual_at(const RegressionInstance& inst, const Vector& x) { return build_residual(inst, x); }

// Plain Newton on a smooth convex objective, as a reference minimizer.
Vector newton_min(const Objective& f, Vector x, int iters = 200) {
  for (int it = 0; it < iters; ++it) {
    const Vector g = f.gradient(x);
    if (g.norm() < 1e-14) break;
    Matrix H = f.hessian(x);
    H.diagonal().array() += 1e-14 * (1.0 + H.diagonal().cwiseAbs().maxCoeff());
    const Vector dx = H.ldlt().solve(-g);
    double t = 1.0;
    const double f0 = f.value(x);
    while (f.value(x + t * dx) > f0 + 1e-4 * t * g.dot(dx) && t > 1e-20) t *= 0.5;
    x += t * dx;
  }
  return x;
}

}  // namespace

TEST(LeastSquares, IdentityAndRange) {
  const Vector b = vec({1.0, -2.0, 3.0});
  EXPECT_LT((least_squares_init(Matrix::Identity(3, 3), b).x - b).norm(), 1e-14);
  const Matrix A = gaussian_matrix(8, 3, 1);
  const Vector x_true = vec({0.5, -1.0, 2.0});
  const auto r = least_squares_init(A, A * x_true);
  EXPECT_LT((A * r.x - A * x_true).norm(), 1e-12);
  EXPECT_FALSE(r.rank_deficient);
}

TEST(LeastSquares, MatchesNormalEquations) {
  const Matrix A = gaussian_matrix(20, 5, 2);
  const Vector b = gaussian(20, 3);
  const Vector x = least_squares_init(A, b).x;
  const Vector ref = (A.transpose() * A).llt().solve(A.transpose() * b);
  EXPECT_LT((x - ref).norm(), 1e-8);
}

TEST(LeastSquares, RankDeficientGivesMinimumNorm) {
  Matrix A(4, 2);
  A << 1, 2, 2, 4, 3, 6, 1, 2;
  const Vector b = vec({1.0, 0.0, 2.0, 1.0});
  const auto r = least_squares_init(A, b);
  EXPECT_TRUE(r.rank_deficient);
  // The minimum-norm solution is parallel to (1, 2).
  EXPECT_NEAR(r.x[1], 2.0 * r.x[0], 1e-12);
}

TEST(Regression, InputValidation) {
  EXPECT_THROW(make_regression(Matrix::Ones(2, 3), Vector::Ones(2), 4.0, 1e-3), DomainError);
  EXPECT_THROW(make_regression(Matrix::Ones(3, 2), Vector::Ones(2), 4.0, 1e-3), DomainError);
  Matrix Z = Matrix::Ones(3, 2);
  Z.col(1).setZero();
  EXPECT_THROW(make_regression(Z, Vector::Ones(3), 4.0, 1e-3), DomainError);
  EXPECT_THROW(make_regression(Matrix::Ones(3, 1), Vector::Ones(3), 1.5, 1e-3), DomainError);
  EXPECT_THROW(make_regression(Matrix::Ones(3, 1), Vector::Ones(3), 4.0, 0.0), DomainError);
}

TEST(Residual, BuildExamples) {
  // x = 0 makes v = -b.
  auto inst = make_regression(Matrix::Identity(2, 2), vec({-1.0, 2.0}), 4.0, 1e-3);
  ResidualProblem r = residual_at(inst, Vector::Zero(2));
  EXPECT_DOUBLE_EQ(r.gtilde[0], 1.0);
  EXPECT_DOUBLE_EQ(r.gtilde[1], -8.0);
  EXPECT_DOUBLE_EQ(r.Rtilde[0], 2.0);
  EXPECT_DOUBLE_EQ(r.Rtilde[1], 8.0);

  auto inst2 = make_regression(Matrix::Identity(2, 2), vec({-1.0, 2.0}), 2.0, 1e-3);
  r = residual_at(inst2, Vector::Zero(2));
  EXPECT_DOUBLE_EQ(r.Rtilde[0], 2.0);
  EXPECT_DOUBLE_EQ(r.Rtilde[1], 2.0);

  r = residual_at(inst, vec({-1.0, 2.0}));
  EXPECT_EQ(r.gtilde.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(r.Rtilde.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Residual, ObjectiveTermByTerm) {
  const auto inst = make_regression(gaussian_matrix(12, 3, 4), gaussian(12, 5), 3.0, 1e-3);
  const Vector x = gaussian(3, 6);
  const ResidualProblem r = residual_at(inst, x);
  const Vector delta = gaussian(3, 7);
  const Vector v = *inst.A * x - inst.b;
  const Vector u = *inst.A * delta;
  double ref = 0.0;
  for (Index i = 0; i < v.size(); ++i) {
    const double w = std::pow(std::abs(v[i]), 1.0);
    ref += w * v[i] * u[i] + 2.0 * w * u[i] * u[i] + std::pow(std::abs(u[i]), 3.0);
  }
  EXPECT_NEAR(residual_objective(r, delta), ref, 1e-10 * (1.0 + std::abs(ref)));
  EXPECT_EQ(residual_objective(r, Vector::Zero(3)), 0.0);
}

TEST(RelativeSmoothness, HessianSandwich) {
  // ∇²f_y(x) lies between (1/e) and e times ∇²h_y(x) along any direction.
  std::mt19937_64 rng(8);
  const auto inst = make_regression(gaussian_matrix(10, 3, 43), gaussian(10, 44), 4.0, 1e-3);
  const ResidualObjective f(residual_at(inst, gaussian(3, 45)));
  const double C = relative_smoothness_constant(4.0);
  for (int t = 0; t < 40; ++t) {
    const Vector y = 0.5 * gaussian_vector(rng, 3);
    const Vector x = y + std::pow(10.0, (t % 5) - 3.0) * gaussian_vector(rng, 3);
    const Vector z = gaussian_vector(rng, 3);
    const double ratio = z.dot(prox_objective_hessian(f, x, y, 2.0, C) * z) /
                         z.dot(reference_hessian(f, x, y, 2.0, C) * z);
    EXPECT_GE(ratio, 1.0 / std::numbers::e - 1e-9);
    EXPECT_LE(ratio, std::numbers::e + 1e-9);
  }
}

TEST(SmoothedPNorm, ZeroGradientGivesZero) {
  const Matrix A = gaussian_matrix(6, 2, 9);
  const Vector x = solve_smoothed_pnorm(Vector::Zero(2), Vector::Ones(6), Vector::Ones(6), A, 3.0, 1e-12);
  EXPECT_EQ(x.norm(), 0.0);
}

TEST(SmoothedPNorm, QuadraticCaseIsLinearSolve) {
  const Matrix A = gaussian_matrix(10, 3, 10);
  const Vector g = gaussian(3, 11);
  Vector Rw = gaussian(10, 12).cwiseAbs();
  Vector W = gaussian(10, 13).cwiseAbs();
  const Vector x = solve_smoothed_pnorm(g, Rw, W, A, 2.0, 1e-13);
  const Matrix M = 2.0 * A.transpose() * (Rw + W.cwiseAbs2()).asDiagonal() * A;
  const Vector ref = M.ldlt().solve(-g);
  EXPECT_LT((x - ref).norm(), 1e-9 * (1.0 + ref.norm()));
}

TEST(SmoothedPNorm, OneDimensionalMatchesGrid) {
  const Matrix A = gaussian_matrix(7, 1, 14);
  const Vector Rw = gaussian(7, 15).cwiseAbs();
  const Vector W = gaussian(7, 16).cwiseAbs();
  const Vector g = vec({-3.0});
  const double p = 3.0;
  const Vector x = solve_smoothed_pnorm(g, Rw, W, A, p, 1e-13);
  auto obj = [&](double t) {
    const Vector u = A.col(0) * t;
    return g[0] * t + Rw.dot(u.cwiseAbs2()) + pnorm_pow(W.cwiseProduct(u), p);
  };
  const auto ref = reference::grid_minimize(obj, -10.0, 10.0);
  EXPECT_NEAR(x[0], ref.first, 1e-7);
}

TEST(Subproblem, StationarityAndPsdCheck) {
  const Matrix A = gaussian_matrix(9, 3, 17);
  SubproblemSpec sp;
  sp.d = gaussian(3, 18);
  sp.c = gaussian(3, 19);
  sp.metric = Matrix::Identity(3, 3);
  sp.lambda_t = 0.7;
  sp.p = 3.0;
  const Vector x = solve_subproblem(sp, A);
  // d + 2M(x - c) + λ_t p Aᵀ Φ(A(x - c)) = 0
  const Vector u = A * (x - sp.c);
  const Vector grad = sp.d + 2.0 * sp.metric * (x - sp.c) + sp.lambda_t * sp.p * A.transpose() * phi(u, sp.p);
  EXPECT_LT(grad.norm(), 1e-8 * sp.d.norm());
  sp.metric(0, 0) = -1.0;
  EXPECT_THROW(solve_subproblem(sp, A), DomainError);
}

TEST(RelativeSmoothness, ProxMatchesDirectMinimization) {
  const auto inst = make_regression(gaussian_matrix(16, 4, 20), gaussian(16, 21), 4.0, 1e-3);
  const ResidualObjective f(residual_at(inst, least_squares_init(*inst.A, inst.b).x));
  const double C = 2.0;
  const double p = 2.0;
  const Vector y = 0.1 * gaussian(4, 22);
  const RelSmoothResult r = prox_via_relative_smoothness(f, y, p, C);
  ASSERT_TRUE(r.converged);
  struct Prox final : Objective {
    const ResidualObjective& f;
    Vector y;
    double p, C, s;
    Prox(const ResidualObjective& f_, Vector y_, double p_, double C_, double s_)
        : f(f_), y(std::move(y_)), p(p_), C(C_), s(s_) {}
    Index dim() const override { return f.dim(); }
    double value(const Vector& x) const override {
      return f.value(x) + C * std::pow(pnorm(*f.problem().A * (x - y), p), s);
    }
    Vector gradient(const Vector& x) const override {
      const Vector u = *f.problem().A * (x - y);
      const double n = pnorm(u, p);
      if (n == 0.0) return f.gradient(x);
      return f.gradient(x) + C * s * std::pow(n, s - p) * f.problem().A->transpose() * phi(u, p);
    }
    bool has_hessian() const override { return true; }
    Matrix hessian(const Vector& x) const override { return prox_objective_hessian(f, x, y, p, C); }
  } direct(f, y, p, C, inst.s);
  const Vector ref = newton_min(direct, y);
  const double fr = direct.value(r.x), fref = direct.value(ref);
  EXPECT_LE(std::abs(fr - fref), 1e-6 * std::abs(fref) + 1e-12);
}

TEST(RelativeSmoothness, OptimalCenterStaysPut) {
  // res is minimized at Δ* and the prox term vanishes there, so prox(Δ*) = Δ*.
  const auto inst = make_regression(gaussian_matrix(10, 2, 23), gaussian(10, 24), 4.0, 1e-3);
  const ResidualObjective f(residual_at(inst, Vector::Zero(2)));
  const Vector star = newton_min(f, Vector::Zero(2));
  const RelSmoothResult r = prox_via_relative_smoothness(f, star, 2.0, 1.0);
  EXPECT_LT((*inst.A * (r.x - star)).norm(), 1e-7 * (1.0 + (*inst.A * star).norm()));
}

TEST(ResidualSolve, ZeroGradientReturnsZero) {
  auto inst = make_regression(Matrix::Identity(3, 3), vec({1.0, 2.0, 3.0}), 4.0, 1e-3);
  const auto r = solve_residual_2approx(residual_at(inst, inst.b));
  EXPECT_EQ(r.delta.norm(), 0.0);
  EXPECT_TRUE(r.certified);
}

TEST(ResidualSolve, OneDimensionalWithinFactorTwo) {
  const auto inst = make_regression(gaussian_matrix(12, 1, 25), gaussian(12, 26), 4.0, 1e-3);
  const ResidualProblem res = residual_at(inst, Vector::Zero(1));
  const auto r = solve_residual_2approx(res);
  ASSERT_TRUE(r.certified) << r.message;
  const auto ref = reference::grid_minimize([&](double t) { return residual_objective(res, vec({t})); }, -10.0, 10.0);
  ASSERT_LT(ref.second, 0.0);
  EXPECT_LE(r.value, 0.5 * ref.second * (1.0 - 1e-9));
  EXPECT_LE(r.lower_bound, ref.second + 1e-12);
}

TEST(ResidualSolve, LowerBoundIsValidAndCertifies) {
  for (double s : {3.0, 4.0, 6.0}) {
    const auto inst = make_regression(gaussian_matrix(40, 4, 27), gaussian(40, 28), s, 1e-3);
    const ResidualProblem res = residual_at(inst, least_squares_init(*inst.A, inst.b).x);
    const ResidualObjective f(res);
    const Vector star = newton_min(f, Vector::Zero(4));
    const double opt = f.value(star);
    const NullSpaceProjector proj(*inst.A);
    EXPECT_LE(residual_lower_bound(res, Vector::Zero(4), proj), opt + 1e-12);
    EXPECT_NEAR(residual_lower_bound(res, star, proj), opt, 1e-8 * std::abs(opt));
    const auto r = solve_residual_2approx(res, {}, &proj);
    ASSERT_TRUE(r.certified) << r.message;
    EXPECT_LE(r.value, 0.5 * opt);
    EXPECT_LE(r.iterations, residual_iteration_budget(inst.n(), 2.0, s));
  }
}

TEST(ResidualSolve, HomogeneityAtOptimum) {
  // At the optimum, ⟨∇res(Δ*), Δ*⟩ = 0 gives g̃ᵀu + 2Σ R̃ u² + s‖u‖_s^s = 0 with u = AΔ*.
  const auto inst = make_regression(gaussian_matrix(30, 3, 29), gaussian(30, 30), 4.0, 1e-3);
  const ResidualProblem res = residual_at(inst, Vector::Zero(3));
  const ResidualObjective f(res);
  const Vector star = newton_min(f, Vector::Zero(3));
  const Vector u = *inst.A * star;
  const double lin = res.gtilde.dot(u), quad = res.Rtilde.dot(u.cwiseAbs2()), pw = pnorm_pow(u, 4.0);
  EXPECT_LE(std::abs(lin + 2.0 * quad + 4.0 * pw), 1e-8 * (std::abs(lin) + quad + pw));
}

TEST(ResidualSolve, GenericOracleAgrees) {
  const auto inst = make_regression(gaussian_matrix(32, 4, 31), gaussian(32, 32), 4.0, 1e-3);
  const ResidualProblem res = residual_at(inst, least_squares_init(*inst.A, inst.b).x);
  ResidualSolveOptions a, b;
  a.warm_start = b.warm_start = false;
  b.generic_oracle = true;
  const auto ra = solve_residual_2approx(res, a);
  const auto rb = solve_residual_2approx(res, b);
  ASSERT_TRUE(ra.certified && rb.certified);
  EXPECT_NEAR(ra.value, rb.value, 1e-6 * std::abs(rb.value));
}

TEST(LowerBound, RegressionBoundIsValid) {
  const auto inst = make_regression(gaussian_matrix(25, 3, 33), gaussian(25, 34), 4.0, 1e-3);
  const auto ref = reference::damped_newton_regression(*inst.A, inst.b, 4.0, Vector::Zero(3));
  const NullSpaceProjector proj(*inst.A);
  std::mt19937_64 rng(35);
  for (int trial = 0; trial < 20; ++trial) {
    const Vector x = gaussian_vector(rng, 3);
    EXPECT_LE(regression_lower_bound(inst, x, proj), ref.objective * (1.0 + 1e-12));
  }
  EXPECT_NEAR(regression_lower_bound(inst, ref.x, proj), ref.objective, 1e-8 * ref.objective);
}

TEST(ExactStep, MatchesScalarMinimizer) {
  const Vector v = gaussian(10, 36), u = gaussian(10, 37);
  for (double s : {2.0, 3.0, 4.0}) {
    const double eta = exact_step(v, u, s);
    const auto ref = reference::grid_minimize([&](double t) { return pnorm_pow(v + t * u, s); }, 0.0, 20.0);
    EXPECT_NEAR(eta, ref.first, 1e-7);
  }
  EXPECT_EQ(exact_step(v, Vector::Zero(10), 4.0), 0.0);
}

TEST(Refinement, ConsistentSystemStopsAtOnce) {
  const Matrix A = gaussian_matrix(6, 2, 38);
  const auto inst = make_regression(A, A * vec({1.0, -1.0}), 4.0, 1e-6);
  const auto rep = iterative_refinement(inst);
  EXPECT_EQ(rep.status, RunStatus::converged);
  EXPECT_EQ(rep.cycles.size(), 1u);
  EXPECT_EQ(rep.residual_calls, 0);
}

TEST(Refinement, MonotoneAndMatchesNewton) {
  for (double s : {3.0, 4.0, 6.0}) {
    const auto inst = make_regression(gaussian_matrix(64, 5, 39), gaussian(64, 40), s, 1e-8);
    const auto rep = iterative_refinement(inst);
    ASSERT_EQ(rep.status, RunStatus::converged) << rep.message;
    for (size_t i = 1; i < rep.cycles.size(); ++i) {
      EXPECT_LE(rep.cycles[i].objective, rep.cycles[i - 1].objective);
      EXPECT_GE(rep.cycles[i].lower_bound, rep.cycles[i - 1].lower_bound);
    }
    const auto ref = reference::damped_newton_regression(*inst.A, inst.b, s, Vector::Zero(5));
    EXPECT_LE(rep.objective, ref.objective * (1.0 + 1e-7));
    EXPECT_LE(rep.lower_bound, ref.objective * (1.0 + 1e-12));
    EXPECT_LE(rep.residual_calls, refinement_budget(inst));
  }
}

TEST(Refinement, HigherInnerExponent) {
  const auto inst = make_regression(gaussian_matrix(48, 4, 41), gaussian(48, 42), 6.0, 1e-6);
  RefinementOptions opt;
  opt.residual.p = 4.0;
  const auto rep = iterative_refinement(inst, opt);
  ASSERT_EQ(rep.status, RunStatus::converged) << rep.message;
  const auto ref = reference::damped_newton_regression(*inst.A, inst.b, 6.0, Vector::Zero(4));
  EXPECT_LE(rep.objective, ref.objective * (1.0 + 1e-5));
}
