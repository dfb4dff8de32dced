#include "lpacc/accel.hpp"
#include "lpacc/bench.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace lpacc;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

template <class F>
double scalar_root(F f, double lo, double hi) {
  for (int i = 0; i < 300; ++i) {
    const double mid = 0.5 * (lo + hi);
    if ((f(mid) > 0) == (f(hi) > 0)) hi = mid;
    else lo = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST(Coefficient, ClosedForms) {
  EXPECT_NEAR(solve_coefficient(0.0, 0.2, 2.0), 1.0, 1e-15);
  EXPECT_NEAR(solve_coefficient(1.0, 0.2, 2.0), (1.0 + std::sqrt(5.0)) / 2.0, 1e-14);
}

TEST(Coefficient, MatchesBisectionAcrossExponents) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-6.0, 6.0);
  for (double p : {2.0, 3.0, 4.0, 6.0}) {
    for (double factor : {5.0, std::pow(3.0 * p, p)}) {
      for (int trial = 0; trial < 50; ++trial) {
        const double A = std::pow(10.0, U(rng)), lam = std::pow(10.0, U(rng));
        const double a = solve_coefficient(A, lam, p, factor);
        // Compare in log space: the root spans many decades.
        auto g = [&](double u) { return std::log(factor * lam) + p * u - (p - 1.0) * std::log(A + std::exp(u)); };
        const double ref = scalar_root(g, -200.0, 200.0);
        EXPECT_NEAR(std::log(a), ref, 1e-10) << "p=" << p << " A=" << A << " lambda=" << lam;
      }
    }
  }
}

TEST(Coefficient, DecreasesInLambda) {
  for (double p : {2.0, 3.0, 5.0}) {
    const double first = solve_coefficient(2.0, 1e-3, p);
    double prev = kInf;
    for (double lam = 1e-3; lam < 1e9; lam *= 10.0) {
      const double a = solve_coefficient(2.0, lam, p);
      EXPECT_LT(a, prev);
      prev = a;
    }
    EXPECT_LT(prev, 1e-2 * first);
  }
}

TEST(Coefficient, RejectsBadInput) {
  EXPECT_THROW(solve_coefficient(-1.0, 1.0, 2.0), DomainError);
  EXPECT_THROW(solve_coefficient(1.0, 0.0, 2.0), DomainError);
  EXPECT_THROW(solve_coefficient(1.0, 1.0, 1.5), DomainError);
}

TEST(Mirror, Examples) {
  const Vector z = mirror_step(vec({2.0, -4.0}), vec({0.0, 0.0}), 2.0);
  EXPECT_NEAR(z[0], -1.0, 1e-14);
  EXPECT_NEAR(z[1], 2.0, 1e-14);
  const Vector y0 = vec({0.3, -1.2, 2.0});
  EXPECT_LT((mirror_step(Vector::Zero(3), y0, 3.0) - y0).norm(), 1e-14);
  const Vector z4 = mirror_step(vec({-4.0, 0.0}), vec({0.0, 0.0}), 4.0);
  EXPECT_NEAR(z4[0], 1.0, 1e-14);
  EXPECT_NEAR(z4[1], 0.0, 1e-14);
}

TEST(Mirror, MinimizesLinearPlusBregman) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> N(0.0, 1.0);
  for (double p : {2.0, 3.0, 4.5}) {
    for (int trial = 0; trial < 20; ++trial) {
      Vector w(4), y0(4);
      for (int i = 0; i < 4; ++i) {
        w[i] = N(rng);
        y0[i] = N(rng);
      }
      const Vector z = mirror_step(w, y0, p);
      auto obj = [&](const Vector& v) { return w.dot(v) + bregman_omega_p(v, y0, p); };
      const double fz = obj(z);
      for (int j = 0; j < 20; ++j) {
        Vector pert(4);
        for (int i = 0; i < 4; ++i) pert[i] = 1e-3 * N(rng);
        EXPECT_LE(fz, obj(z + pert) + 1e-12);
      }
    }
  }
}

TEST(Envelope, FormulaAndMonotone) {
  const PNormParams params = PNormParams::finite(2, 4, 1.0);
  // (4/2)^5 · Ψ_0^2 / T^5
  EXPECT_NEAR(rate_envelope(params, 3.0, 2), 32.0 * 9.0 / 32.0, 1e-12);
  for (int T = 1; T < 50; ++T) EXPECT_GT(rate_envelope(params, 1.0, T), rate_envelope(params, 1.0, T + 1));
}

TEST(Envelope, RootGrowthAvoidsCancellation) {
  EXPECT_NEAR(root_growth(0.0, 4.0, 2.0), 2.0, 1e-15);
  EXPECT_NEAR(root_growth(4.0, 5.0, 2.0), 1.0, 1e-15);
  // Direct subtraction would lose every digit here.
  const double g = root_growth(1e8, 1e-8, 2.0);
  EXPECT_NEAR(g / (0.5e-8 / 1e4), 1.0, 1e-6);
}

TEST(ProxSolver, StationaryStartStopsImmediately) {
  QuadraticObjective f(Matrix::Identity(3, 3), Vector::Zero(3));
  RunOptions opt;
  opt.grad_tol = 1e-12;
  const RunResult r = run_prox_solver(f, Vector::Zero(3), PNormParams::finite(2, 4, 1.0), opt);
  EXPECT_EQ(r.status, RunStatus::converged);
  EXPECT_TRUE(r.records.empty());
}

TEST(ProxSolver, QuarticRunIsCertifiedAndUnderEnvelope) {
  // ‖x‖_4^4 from (1,1,1,1); x* = 0 and Ψ_0 = ‖x_init‖².
  SeparablePowerObjective f(Vector::Ones(4), Vector::Zero(4), 4.0);
  const PNormParams params = PNormParams::finite(2, 4, 1.0);
  RunOptions opt;
  opt.max_iterations = 20;
  opt.reference = Reference{Vector::Zero(4), 0.0};
  const RunResult r = run_prox_solver(f, Vector::Ones(4), params, opt);
  ASSERT_EQ(r.status, RunStatus::completed) << r.message;
  ASSERT_EQ(r.records.size(), 20u);
  ASSERT_TRUE(r.psi0.has_value());
  EXPECT_NEAR(*r.psi0, 4.0, 1e-12);
  EXPECT_TRUE(r.all_certified());
  double A_prev = 0.0;
  for (const auto& rec : r.records) {
    EXPECT_GE(rec.A_next, A_prev);
    A_prev = rec.A_next;
    ASSERT_TRUE(rec.growth && rec.growth_floor);
    EXPECT_GE(*rec.growth, *rec.growth_floor - 1e-12);
    ASSERT_TRUE(rec.potential_prev && rec.potential_next && rec.required_decrement);
    EXPECT_LE(*rec.potential_next, *rec.potential_prev - *rec.required_decrement + 1e-7 * *r.psi0);
  }
  EXPECT_LE(*r.records.back().gap, rate_envelope(params, *r.psi0, 20));
}

TEST(ProxSolver, AcceptedStepSatisfiesProxOptimality) {
  // ∇f(x') = -λ_t p Φ(x' - y) with λ_t = λ‖x' - y‖^{s-p} up to the line-search tolerance.
  SeparablePowerObjective f(vec({1.0, 2.0, 0.5}), vec({0.2, -0.1, 0.4}), 4.0);
  const PNormParams params = PNormParams::finite(2, 4, 3.0);
  RunOptions opt;
  opt.max_iterations = 5;
  const RunResult r = run_prox_solver(f, vec({1.5, -2.0, 0.7}), params, opt);
  ASSERT_EQ(r.status, RunStatus::completed) << r.message;
  for (const auto& rec : r.records) {
    const double implied = params.lambda * std::pow(rec.step_norm, params.s - params.p);
    EXPECT_LE(std::abs(std::log(rec.lambda_t / implied)), std::log1p(opt.ls_tol) + 1e-9);
  }
}

TEST(ProxSolver, MatchedExponentNeedsNoSearch) {
  QuadraticObjective f(Matrix::Identity(2, 2), vec({1.0, -1.0}));
  RunOptions opt;
  opt.max_iterations = 3;
  const RunResult r = run_prox_solver(f, Vector::Zero(2), PNormParams::matched(2, 0.5), opt);
  for (const auto& rec : r.records) {
    EXPECT_DOUBLE_EQ(rec.lambda_t, 0.5);
    EXPECT_EQ(rec.oracle_calls, 1);
  }
}

TEST(LsfSolver, SmallPsiHatForcesDampedSteps) {
  RunConfig c;
  c.solver = "prox-lsf";
  c.instance = "hard";
  c.k = 16;
  c.d = 17;
  c.max_iterations = 64;
  c.psi_hat = 1e-4;
  const SyntheticProblem prob = synthetic_problem(c);
  LsfOptions opt;
  opt.max_iterations = c.max_iterations;
  opt.psi_hat = c.psi_hat;
  opt.reference = prob.reference;
  opt.radius = prob.radius;
  const RunResult r = run_lsf_solver(*prob.f, prob.x0, PNormParams::finite(2, 4, 1.0), opt);
  ASSERT_NE(r.status, RunStatus::oracle_failure) << r.message;
  int damped = 0;
  for (const auto& rec : r.records) {
    ASSERT_TRUE(rec.beta && rec.step_case);
    EXPECT_GT(*rec.beta, 0.0);
    EXPECT_LE(*rec.beta, 1.0);
    if (*rec.step_case == 2) {
      ++damped;
      EXPECT_LT(*rec.beta, 1.0);
    }
  }
  EXPECT_GT(damped, 0);
  EXPECT_TRUE(r.all_certified());
}

TEST(LsfSolver, HugePsiHatNeverDamps) {
  SeparablePowerObjective f(Vector::Ones(3), Vector::Zero(3), 4.0);
  LsfOptions opt;
  opt.max_iterations = 10;
  opt.psi_hat = 1e12;
  const RunResult r = run_lsf_solver(f, vec({1.0, -0.5, 0.25}), PNormParams::finite(2, 4, 1.0), opt);
  for (const auto& rec : r.records) EXPECT_DOUBLE_EQ(*rec.beta, 1.0);
}

TEST(BallSolver, MinimizerInsideFirstBall) {
  QuadraticObjective f(Matrix::Identity(2, 2), vec({-0.01, 0.0}));
  const RunResult r = run_ball_solver(f, Vector::Zero(2), 0.1, 2.0);
  EXPECT_EQ(r.status, RunStatus::converged);
  EXPECT_EQ(r.records.size(), 1u);
  EXPECT_EQ(r.records[0].oracle_calls, 1);
}

TEST(BallSolver, BoundaryStepsHitRadiusAndSatisfyMultiplierEquation) {
  SeparablePowerObjective f(Vector::Ones(3), Vector::Zero(3), 2.0);
  RunOptions opt;
  opt.max_iterations = 40;
  opt.reference = Reference{Vector::Zero(3), 0.0};
  Vector x0 = vec({1.0, 0.0, 0.0});
  const RunResult r = run_ball_solver(f, x0, 0.1, 2.0, opt);
  ASSERT_NE(r.status, RunStatus::oracle_failure) << r.message;
  int boundary = 0;
  for (const auto& rec : r.records) {
    if (rec.at_boundary && *rec.at_boundary) {
      ++boundary;
      EXPECT_NEAR(rec.step_norm, 0.1, 1e-9);
      ASSERT_TRUE(rec.kkt_residual.has_value());
      EXPECT_LE(*rec.kkt_residual, 1e-6);
    }
  }
  EXPECT_GT(boundary, 0);
  EXPECT_LE(r.records.back().objective, 1e-8);
}

TEST(HighOrder, RemainderWithinBoundAndLAdapts) {
  const SyntheticProblem prob = power4_problem(5, 7);
  HighOrderOptions opt;
  opt.s = 3;
  opt.L = 1e-3;  // too small on purpose
  opt.max_iterations = 15;
  opt.reference = prob.reference;
  const RunResult r = run_high_order(*prob.f, prob.x0, 2.0, opt);
  ASSERT_EQ(r.status, RunStatus::completed) << r.message;
  double L_last = 0.0;
  for (const auto& rec : r.records) {
    ASSERT_TRUE(rec.remainder && rec.remainder_bound && rec.smoothness);
    EXPECT_LE(*rec.remainder, *rec.remainder_bound * (1.0 + 1e-9) + 1e-14);
    EXPECT_GE(*rec.smoothness, L_last);
    L_last = *rec.smoothness;
  }
  EXPECT_GT(L_last, 1e-3);
  EXPECT_LT(r.records.back().objective, prob.f->value(prob.x0));
}

TEST(HighOrder, TaylorStepOnQuadraticIsProxStep) {
  // The Taylor model of a quadratic is exact, so the Taylor oracle is the
  // s-prox with weight 2L/(p (s-1)!).
  Matrix Q(2, 2);
  Q << 2.0, 0.5, 0.5, 1.0;
  QuadraticObjective f(Q, vec({1.0, -1.0}));
  const Vector c = vec({2.0, 2.0});
  const double L = 1.5;
  const ProxResult t = solve_taylor(f, c, L, 3.0, 2.0, 1e-13);
  const ProxResult p = solve_prox(f, ProxQuery{c, PNormParams::finite(2, 3, taylor_weight(L, 3.0, 2.0))});
  EXPECT_LT((t.x - p.x).norm(), 1e-9);
}
