#include "lpacc/geometry.hpp"
#include "lpacc/pnorm.hpp"

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

// Direct Bregman formula in long double, used as an independent check.
long double omega_long(const Vector& x, const Vector& y, double p) {
  long double acc = 0;
  for (Index i = 0; i < x.size(); ++i) {
    const long double xi = x[i], yi = y[i];
    const long double ay = std::fabs(yi);
    const long double dy = (yi == 0) ? 0.0L : std::pow(ay, (long double)p - 2) * yi;
    acc += std::pow(std::fabs(xi), (long double)p) - std::pow(ay, (long double)p) - p * dy * (xi - yi);
  }
  return acc;
}

}  // namespace

TEST(PNorm, KnownValues) {
  EXPECT_DOUBLE_EQ(pnorm(vec({3, 4}), 2), 5.0);
  EXPECT_NEAR(pnorm(vec({1, 1, 1, 1}), 4), std::sqrt(2.0), 1e-15);
  EXPECT_DOUBLE_EQ(pnorm(vec({-7, 2}), kInf), 7.0);
  EXPECT_DOUBLE_EQ(pnorm(vec({0, 0}), 3), 0.0);
  EXPECT_DOUBLE_EQ(dual_norm(vec({3, 4}), 2), 5.0);
  EXPECT_NEAR(dual_norm(vec({1, 1}), 3), std::pow(2.0, 2.0 / 3.0), 1e-15);
  EXPECT_DOUBLE_EQ(pnorm_pow(vec({1, -2}), 3), 9.0);
}

TEST(PNorm, RescalingAvoidsOverflowAndUnderflow) {
  EXPECT_NEAR(pnorm(vec({1e300, 1e300}), 2) / 1e300, std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(pnorm(vec({1e-300, 1e-300}), 4) / 1e-300, std::pow(2.0, 0.25), 1e-15);
}

TEST(PNorm, RejectsBadExponent) { EXPECT_THROW(pnorm(vec({1}), 0.5), DomainError); }

TEST(Phi, SignedPowerAndInverse) {
  const Vector v = vec({-2, 0, 3});
  const Vector ph = phi(v, 3);
  EXPECT_DOUBLE_EQ(ph[0], -4.0);
  EXPECT_DOUBLE_EQ(ph[1], 0.0);
  EXPECT_DOUBLE_EQ(ph[2], 9.0);
  EXPECT_TRUE(phi_inverse(ph, 3).isApprox(v, 1e-14));
  EXPECT_TRUE(grad_pnorm_pow(v, 3).isApprox(3.0 * ph));
  // ⟨Φ(v), v⟩ = ‖v‖_p^p and ‖Φ(v)‖_q = ‖v‖_p^{p-1}.
  EXPECT_NEAR(ph.dot(v), pnorm_pow(v, 3), 1e-12);
  EXPECT_NEAR(dual_norm(ph, 3), std::pow(pnorm(v, 3), 2), 1e-12);
}

TEST(Bregman, ZeroOnDiagonalAndPositiveOff) {
  const Vector y = vec({0.5, -1, 2});
  EXPECT_EQ(bregman_omega_p(y, y, 4), 0.0);
  EXPECT_GT(bregman_omega_p(y + vec({1e-3, 0, 0}), y, 4), 0.0);
  EXPECT_DOUBLE_EQ(bregman_omega_p(vec({1, 0}), vec({0, 0}), 2), 1.0);
  EXPECT_DOUBLE_EQ(bregman_omega_p(vec({1}), vec({0}), 3), 1.0);
}

TEST(Bregman, MatchesDirectFormulaInExtendedPrecision) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> gauss;
  for (double p : {2.0, 2.5, 3.0, 4.0, 6.0}) {
    for (int trial = 0; trial < 200; ++trial) {
      Vector x(5), y(5);
      for (Index i = 0; i < 5; ++i) {
        x[i] = gauss(rng);
        y[i] = gauss(rng);
      }
      const double ours = bregman_omega_p(x, y, p);
      const long double ref = omega_long(x, y, p);
      EXPECT_NEAR(ours, static_cast<double>(ref), 1e-12 * std::max(1.0, ours)) << "p=" << p;
    }
  }
}

TEST(Bregman, SmallStepsKeepRelativeAccuracy) {
  // For |δ| << |x|: ω = |x|^p [(1+u)^p - 1 - pu] = 96 u² (1 + 2u/3 + u²/6)
  // at p = 4, x = 2. δ is a power of two so x + δ is exact.
  const double delta = std::ldexp(1.0, -23);
  const double u = delta / 2.0;
  const Vector x = vec({2.0});
  const double expected = 96.0 * u * u * (1.0 + 2.0 * u / 3.0 + u * u / 6.0);
  EXPECT_NEAR(bregman_omega_p(x + vec({delta}), x, 4.0) / expected, 1.0, 1e-13);
}

TEST(Sandwich, HoldsOnRandomCases) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> logscale(-3, 3);
  for (double p : {2.0, 3.0, 4.0, 6.0}) {
    for (int trial = 0; trial < 2000; ++trial) {
      const Index d = 1 + trial % 6;
      Vector x(d), delta(d);
      const double sx = std::pow(10.0, logscale(rng)), sd = std::pow(10.0, logscale(rng));
      for (Index i = 0; i < d; ++i) {
        x[i] = sx * gauss(rng);
        delta[i] = sd * gauss(rng);
      }
      const double w = bregman_omega_p(x + delta, x, p);
      const SandwichBounds b = bregman_sandwich(x, delta, p);
      EXPECT_GE(w, b.lower * (1 - 1e-9)) << "p=" << p;
      EXPECT_LE(w, b.upper * (1 + 1e-9)) << "p=" << p;
    }
  }
}

TEST(Sandwich, AtOriginReducesToPowerBounds) {
  const Vector x = Vector::Zero(3);
  const Vector d = vec({1, -2, 0.5});
  const double p = 3.0;
  const SandwichBounds b = bregman_sandwich(x, d, p);
  EXPECT_DOUBLE_EQ(bregman_omega_p(d, x, p), pnorm_pow(d, p));
  EXPECT_NEAR(b.lower, std::pow(2.0, -4.0) * pnorm_pow(d, p), 1e-14);
}

TEST(Geometry, IdentityMirrorStepClosedForm) {
  const IdentityGeometry g(3.0);
  const Vector y0 = vec({0.5, -1.0, 0.0});
  const Vector w = vec({0.2, -0.4, 1.0});
  const Vector z = g.mirror_step(w, y0);
  // Stationarity: w + pΦ(z) - pΦ(y0) = 0.
  const Vector stat = w + 3.0 * phi(z, 3.0) - 3.0 * phi(y0, 3.0);
  EXPECT_LT(stat.norm(), 1e-13);
  EXPECT_TRUE(g.mirror_step(Vector::Zero(3), y0).isApprox(y0));
}

TEST(Geometry, LinearMapMirrorStepStationary) {
  auto m = std::make_shared<Matrix>(Matrix::Random(7, 3));
  for (double p : {2.0, 3.0}) {
    const LinearMapGeometry g(m, p);
    const Vector y0 = vec({0.3, -0.2, 0.1});
    const Vector w = vec({0.5, 0.1, -0.3});
    const Vector z = g.mirror_step(w, y0);
    const Vector stat = w + m->transpose() * (p * phi(*m * z, p)) - m->transpose() * (p * phi(*m * y0, p));
    EXPECT_LT(stat.norm(), 1e-10) << "p=" << p;
  }
}

TEST(Geometry, PenaltyDerivativesMatchFiniteDifferences) {
  const Vector u = vec({0.7, -0.3, 1.1});
  for (double p : {2.0, 3.0}) {
    for (double e : {p, 4.0}) {
      const IdentityGeometry g(p);
      const LocalModel m = g.penalty(u, e, 1.5);
      EXPECT_NEAR(m.value, 1.5 * std::pow(pnorm(u, p), e), 1e-12);
      for (Index i = 0; i < 3; ++i) {
        Vector up = u, dn = u;
        up[i] += 1e-6;
        dn[i] -= 1e-6;
        const double fd = (g.penalty(up, e, 1.5).value - g.penalty(dn, e, 1.5).value) / 2e-6;
        EXPECT_NEAR(m.grad[i], fd, 1e-6);
        const Vector hd = (g.penalty(up, e, 1.5).grad - g.penalty(dn, e, 1.5).grad) / 2e-6;
        EXPECT_TRUE(m.hess.col(i).isApprox(hd, 1e-6));
      }
    }
  }
}
