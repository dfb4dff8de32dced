#pragma once

#include "lpacc/accel.hpp"
#include "lpacc/bench.hpp"
#include "lpacc/fit.hpp"
#include "lpacc/hardness.hpp"
#include "lpacc/pnorm.hpp"
#include "lpacc/reference.hpp"
#include "lpacc/regression.hpp"
#include "lpacc/roots.hpp"

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace lpacc::acceptance {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  /// Measured values against their tolerances, one line.
  std::string message;
  /// Deterministic JSON-lines output of the runs behind the verdict.
  std::string trace;
  double seconds = 0.0;
};

struct Options {
  std::uint64_t seed = 7;
};

inline constexpr int kCriteria = 12;

inline const char* criterion_name(int id) {
  static const char* names[] = {"",          "bregman",    "mirror",   "potential", "rates",
                                "growth",    "lsf",        "ball",     "regression", "sandwich",
                                "zero-chain", "high-order", "determinism"};
  require(id >= 1 && id <= kCriteria, "unknown criterion " + std::to_string(id));
  return names[id];
}

/// Criterion ids of a named suite; "all" is every criterion.
inline std::vector<int> suite_ids(const std::string& suite) {
  std::vector<int> ids;
  for (int i = 1; i <= kCriteria; ++i)
    if (suite == "all" || suite == criterion_name(i) || suite == std::to_string(i)) ids.push_back(i);
  require(!ids.empty(), "unknown acceptance suite '" + suite + "'");
  return ids;
}

namespace detail {

inline std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

inline std::string sci(double v) { return fmt("%.3g", v); }

inline std::string json_line(const nlohmann::ordered_json& j) { return j.dump() + "\n"; }

// ω_p lower ≤ ω ≤ upper on random pairs with steps from 1e-6 to 1e2 of x.
inline CriterionResult bregman(const Options& o) {
  CriterionResult r;
  std::mt19937_64 rng(o.seed);
  std::normal_distribution<double> N;
  std::uniform_int_distribution<int> dim(1, 10);
  std::uniform_real_distribution<double> logscale(-6.0, 2.0);
  const auto t0 = std::chrono::steady_clock::now();
  int violations = 0, cases = 0;
  double worst_lo = kInf, worst_hi = kInf;
  for (double p : {2.0, 3.0, 4.0, 6.0}) {
    double p_lo = kInf, p_hi = kInf;
    for (int c = 0; c < 10000; ++c) {
      const int d = dim(rng);
      Vector x(d), delta(d);
      for (int i = 0; i < d; ++i) x[i] = N(rng);
      const double scale = std::pow(10.0, logscale(rng));
      for (int i = 0; i < d; ++i) delta[i] = scale * N(rng);
      const double w = bregman_omega_p(x + delta, x, p);
      const SandwichBounds b = bregman_sandwich(x, delta, p);
      // Relative slack of each side; negative means violated.
      const double lo_margin = (w - b.lower) / b.lower;
      const double hi_margin = (b.upper - w) / b.upper;
      if (lo_margin < -1e-9 || hi_margin < -1e-9) ++violations;
      p_lo = std::min(p_lo, lo_margin);
      p_hi = std::min(p_hi, hi_margin);
      ++cases;
    }
    worst_lo = std::min(worst_lo, p_lo);
    worst_hi = std::min(worst_hi, p_hi);
    nlohmann::ordered_json j;
    j["p"] = p;
    j["cases"] = 10000;
    j["min_lower_margin"] = p_lo;
    j["min_upper_margin"] = p_hi;
    r.trace += json_line(j);
  }
  const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  r.pass = violations == 0 && sec < 5.0;
  r.message = std::to_string(cases) + " pairs, " + std::to_string(violations) +
              " violations (tol 1e-9 rel), min margins lower " + sci(worst_lo) + " upper " + sci(worst_hi) +
              ", " + fmt("%.2f", sec) + " s (limit 5 s)";
  return r;
}

// Closed-form mirror step against the first-order condition solved
// coordinate-wise by bisection: w_i + pΦ(z_i) = pΦ(y0_i).
inline CriterionResult mirror(const Options& o) {
  CriterionResult r;
  std::mt19937_64 rng(o.seed + 1);
  std::normal_distribution<double> N;
  std::uniform_int_distribution<int> dim(1, 10);
  const double ps[] = {2.0, 3.0, 4.0, 6.0};
  double worst = 0.0;
  for (int c = 0; c < 100; ++c) {
    const double p = ps[c % 4];
    const int d = dim(rng);
    Vector w(d), y0(d);
    for (int i = 0; i < d; ++i) {
      w[i] = 3.0 * N(rng);
      y0[i] = N(rng);
    }
    const Vector z = mirror_step(w, y0, p);
    for (int i = 0; i < d; ++i) {
      const double target = p * signed_pow(y0[i], p) - w[i];
      auto h = [&](double t) { return p * signed_pow(t, p) - target; };
      const double zi = bisect_increasing(h, -1.0, 1.0);
      worst = std::max(worst, std::abs(zi - z[i]) / std::max(1.0, std::abs(zi)));
    }
  }
  nlohmann::ordered_json j;
  j["cases"] = 100;
  j["max_rel_error"] = worst;
  r.trace = json_line(j);
  r.pass = worst <= 1e-6;
  r.message = "100 cases, max relative deviation " + sci(worst) + " (tol 1e-6)";
  return r;
}

inline RunConfig quartic_config(double mu, double lambda, std::uint64_t seed, int T) {
  RunConfig c;
  c.solver = "prox";
  c.instance = "quartic";
  c.d = 10;
  c.p = 2.0;
  c.s = 4.0;
  c.mu = mu;
  c.lambda = lambda;
  c.seed = seed;
  c.max_iterations = T;
  return c;
}

inline RunConfig hard_config(int k, const std::string& solver = "prox") {
  RunConfig c;
  c.solver = solver;
  c.instance = "hard";
  c.k = k;
  c.d = k + 1;
  c.R = 1.0;
  c.p = 2.0;
  c.s = 4.0;
  c.lambda = 1.0;
  c.max_iterations = k;
  return c;
}

inline std::vector<RunConfig> potential_configs(const Options& o) {
  std::vector<RunConfig> out;
  for (double mu : {1.0, 1e-2, 0.0})
    for (double lam : {1.0, 100.0}) out.push_back(quartic_config(mu, lam, o.seed, 100));
  return out;
}

inline std::vector<int> rate_ks() { return {16, 24, 32, 48, 64, 96, 128, 192}; }

// Φ_{t+1} <= Φ_t - A_{t+1} λ_t ‖x_{t+1} - y_t‖^p + 1e-7 Ψ_0, recomputed.
inline CriterionResult potential(const Options& o) {
  CriterionResult r;
  int runs = 0, iters = 0, bad = 0;
  double worst = kInf;
  std::string fail;
  for (const RunConfig& c : potential_configs(o)) {
    const RunOutcome out = run(c);
    r.trace += out.trace.str();
    ++runs;
    const double slack = 1e-7 * out.trace.summary.at("psi0").get<double>();
    for (const auto& rec : out.trace.records) {
      ++iters;
      const double dec = *rec.potential_prev - *rec.potential_next;
      const double margin = dec - rec.A_next * rec.lambda_t * std::pow(rec.step_norm, c.p) + slack;
      worst = std::min(worst, margin);
      if (margin < 0.0) ++bad;
    }
    if (out.exit_code == exit_oracle && fail.empty()) fail = "; oracle failure: " + out.message;
    if (out.trace.records.size() != static_cast<std::size_t>(c.max_iterations) && fail.empty())
      fail = "; run stopped early after " + std::to_string(out.trace.records.size()) + " iterations";
  }
  r.pass = bad == 0 && fail.empty();
  r.message = std::to_string(runs) + " runs, " + std::to_string(iters) + " iterations, " + std::to_string(bad) +
              " violations, min margin " + sci(worst) + fail;
  return r;
}

// Envelope at every T <= 200 on the quartic runs, decay exponent across the
// hard family with T = k.
inline CriterionResult rates(const Options& o) {
  CriterionResult r;
  int env_bad = 0, env_checked = 0;
  double worst_ratio = 0.0;
  for (double mu : {1.0, 1e-2, 0.0}) {
    const RunOutcome out = run(quartic_config(mu, 1.0, o.seed, 200));
    r.trace += out.trace.str();
    const PNormParams params = PNormParams::finite(2.0, 4.0, 1.0);
    const double psi0 = out.trace.summary.at("psi0").get<double>();
    for (const auto& rec : out.trace.records) {
      const double ratio = *rec.gap / rate_envelope(params, psi0, rec.t + 1);
      worst_ratio = std::max(worst_ratio, ratio);
      ++env_checked;
      if (ratio > 1.001) ++env_bad;
    }
  }
  std::vector<double> ks, gaps;
  std::string table = "k gap:";
  for (int k : rate_ks()) {
    const RunConfig c = hard_config(k);
    const RunOutcome out = run(c);
    r.trace += out.trace.str();
    const PNormParams params = PNormParams::finite(c.p, c.s, c.lambda);
    const double psi0 = out.trace.summary.at("psi0").get<double>();
    for (const auto& rec : out.trace.records) {
      const double ratio = *rec.gap / rate_envelope(params, psi0, rec.t + 1);
      worst_ratio = std::max(worst_ratio, ratio);
      ++env_checked;
      if (ratio > 1.001) ++env_bad;
    }
    ks.push_back(k);
    gaps.push_back(*out.trace.records.back().gap);
    table += " " + std::to_string(k) + "=" + sci(gaps.back());
  }
  const LineFit fit = fit_loglog(ks, gaps);
  const double expected = PNormParams::finite(2.0, 4.0, 1.0).rate_exponent();
  nlohmann::ordered_json j;
  j["fit"] = "gap_vs_k";
  j["slope"] = fit.slope;
  j["residual"] = fit.residual;
  j["expected"] = -expected;
  r.trace += json_line(j);
  const bool slope_ok = std::abs(-fit.slope - expected) <= 0.3;
  r.pass = env_bad == 0 && slope_ok;
  r.message = std::to_string(env_checked) + " envelope checks, " + std::to_string(env_bad) +
              " over 1.001x (max gap/envelope " + sci(worst_ratio) + "); fitted slope " + fmt("%.3f", fit.slope) +
              " vs -" + fmt("%.1f", expected) + " +- 0.3 (fit residual " + sci(fit.residual) + "); " + table;
  return r;
}

// Every line-searched prox trace of the suite.
inline CriterionResult growth(const Options& o) {
  CriterionResult r;
  std::vector<RunConfig> cfgs = potential_configs(o);
  for (int k : rate_ks()) cfgs.push_back(hard_config(k));
  int iters = 0, bad = 0;
  double worst = kInf;
  for (const RunConfig& c : cfgs) {
    const RunOutcome out = run(c);
    r.trace += out.trace.str();
    for (const auto& rec : out.trace.records) {
      ++iters;
      const double lhs = root_growth(rec.A_prev, rec.a, c.p);
      const double floor = 1.0 / (5.0 * c.p * std::pow(rec.lambda_t, 1.0 / c.p));
      worst = std::min(worst, lhs - floor);
      if (lhs < floor - 1e-10) ++bad;
    }
  }
  r.pass = bad == 0 && iters > 0;
  r.message = std::to_string(cfgs.size()) + " traces, " + std::to_string(iters) + " iterations, " +
              std::to_string(bad) + " below 1/(5 p lambda_t^(1/p)) - 1e-10 (min margin " + sci(worst) + ")";
  return r;
}

// Case inequalities recomputed from each record of the line-search-free
// method, on the paired hard instance and on a run that forces Case 2.
inline CriterionResult lsf(const Options&) {
  CriterionResult r;
  const double p = 2.0, s = 4.0, lambda = 1.0;
  int checked = 0, bad = 0, case1 = 0, case2 = 0;
  auto check = [&](const RunOutcome& out) {
    for (const auto& rec : out.trace.records) {
      ++checked;
      bool ok = rec.lambda_bar && *rec.lambda_bar > 0.0;
      if (*rec.step_case == 1) {
        ++case1;
        ok = ok && *rec.beta == 1.0 && rec.lambda_t <= *rec.lambda_bar * (1.0 + 1e-12);
        const double floor = 1.0 / (std::pow(3.0 * p, p + 1.0) * std::pow(*rec.lambda_bar, 1.0 / p));
        ok = ok && root_growth(rec.A_prev, rec.A_next - rec.A_prev, p) >= floor - 1e-10;
        ok = ok && *rec.potential_next <= *rec.potential_prev + *rec.slack;
      } else {
        ++case2;
        ok = ok && *rec.beta < 1.0 && std::abs(*rec.beta - *rec.lambda_bar / rec.lambda_t) <= 1e-12;
        const double dec = std::pow(3.0 * p, -p / (p - 1.0)) * std::pow(lambda, -p / (s - p)) * *rec.A_prime *
                           std::pow(*rec.lambda_bar, s / (s - p));
        ok = ok && *rec.potential_next <= *rec.potential_prev - dec + *rec.slack;
      }
      if (!ok) ++bad;
    }
  };
  const int k = 32;
  const RunOutcome alg1 = run(hard_config(k));
  RunConfig lc = hard_config(k, "prox-lsf");
  lc.psi_hat = 1.0;
  const RunOutcome alg3 = run(lc);
  check(alg3);
  RunConfig forced = hard_config(16, "prox-lsf");
  forced.psi_hat = 1e-4;
  forced.max_iterations = 64;
  const RunOutcome alg3f = run(forced);
  check(alg3f);
  r.trace = alg1.trace.str() + alg3.trace.str() + alg3f.trace.str();
  const double g1 = *alg1.trace.records.back().gap;
  const double g3 = *alg3.trace.records.back().gap;
  const double ratio = g3 / g1;
  r.pass = bad == 0 && case2 > 0 && ratio <= 10.0 && alg3.exit_code != exit_oracle && alg3f.exit_code != exit_oracle;
  r.message = std::to_string(checked) + " records (" + std::to_string(case1) + " case 1, " + std::to_string(case2) +
              " case 2), " + std::to_string(bad) + " failing; gap at T=" + std::to_string(k) + ": line-search-free " +
              sci(g3) + " vs line-searched " + sci(g1) + ", ratio " + fmt("%.3f", ratio) + " (limit 10)";
  return r;
}

inline CriterionResult ball(const Options&) {
  CriterionResult r;
  const double eps = 1e-8;
  std::vector<double> inv_r, iters;
  int boundary = 0, kkt_bad = 0;
  double worst_kkt = 0.0;
  std::string table = "r iters:";
  std::string fail;
  for (double rad : {0.2, 0.1, 0.05, 0.025}) {
    RunConfig c;
    c.solver = "ball";
    c.instance = "diag-quadratic";
    c.d = 10;
    c.seed = 11;
    c.radius = rad;
    c.max_iterations = 2000;
    const RunOutcome out = run(c);
    r.trace += out.trace.str();
    int hit = -1;
    for (const auto& rec : out.trace.records) {
      if (rec.at_boundary && *rec.at_boundary) {
        ++boundary;
        const double kkt = rec.kkt_residual ? *rec.kkt_residual : kInf;
        worst_kkt = std::max(worst_kkt, kkt);
        if (kkt > 1e-6) ++kkt_bad;
      }
      if (hit < 0 && *rec.gap <= eps) hit = rec.t + 1;
    }
    if (hit < 0 && fail.empty()) fail = "; r=" + sci(rad) + " never reached eps";
    inv_r.push_back(1.0 / rad);
    iters.push_back(hit);
    table += " " + sci(rad) + "=" + std::to_string(hit);
  }
  const LineFit fit = fit_loglog(inv_r, iters);
  const double target = 2.0 / 3.0;
  nlohmann::ordered_json j;
  j["fit"] = "iters_vs_inv_r";
  j["slope"] = fit.slope;
  j["target"] = target;
  r.trace += json_line(j);
  r.pass = fail.empty() && kkt_bad == 0 && std::abs(fit.slope - target) <= 0.2 * target;
  r.message = std::to_string(boundary) + " boundary steps, max multiplier residual " + sci(worst_kkt) +
              " (tol 1e-6); iterations-to-" + sci(eps) + " slope " + fmt("%.3f", fit.slope) + " vs p/(p+1) = " +
              fmt("%.3f", target) + " +- 20%; " + table + fail;
  return r;
}

// Iterations of the line-searched residual solver from Δ = 0 until the dual
// certificate proves a factor 2, for the residual problem at the
// least-squares point.
inline int iterations_to_2approx(int n, int d, double s, double p, std::uint64_t seed) {
  const RegressionInstance inst = gaussian_regression(n, d, s, 1e-4, seed);
  const ResidualProblem res = build_residual(inst, least_squares_init(*inst.A, inst.b).x);
  ResidualSolveOptions o;
  o.p = p;
  o.warm_start = false;
  const ResidualSolveResult sol = solve_residual_2approx(res, o);
  require(sol.certified, "residual solve at n=" + std::to_string(n) + " was not certified");
  return sol.iterations;
}

inline CriterionResult regression(const Options& o) {
  CriterionResult r;
  const auto t0 = std::chrono::steady_clock::now();
  RunConfig c;
  c.solver = "regression";
  c.instance = "gaussian";
  c.n = 256;
  c.d = 16;
  c.s = 4.0;
  c.p = 2.0;
  c.epsilon = 1e-4;
  c.seed = o.seed;
  const RunOutcome out = run(c);
  const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  r.trace = out.trace.str();
  const RegressionInstance inst = gaussian_regression(c.n, c.d, c.s, c.epsilon, c.seed);
  const auto ref = reference::damped_newton_regression(*inst.A, inst.b, inst.s, least_squares_init(*inst.A, inst.b).x);
  const double obj = out.trace.summary.at("objective").get<double>();
  const int calls = out.trace.summary.at("residual_calls").get<int>();
  const int budget = refinement_budget(inst);
  const bool obj_ok = obj <= (1.0 + c.epsilon) * ref.objective;

  std::vector<double> ns, its;
  std::string table = "n iters:";
  const double s = 4.0, p = 2.0;
  for (int n : {64, 256, 1024, 4096}) {
    double total = 0.0;
    for (int rep = 0; rep < 3; ++rep) total += iterations_to_2approx(n, 8, s, p, o.seed + rep);
    ns.push_back(n);
    its.push_back(total / 3.0);
    table += " " + std::to_string(n) + "=" + fmt("%.2f", total / 3.0);
  }
  const LineFit fit = fit_loglog(ns, its);
  const double bound = (s - p) / (s * (p + 1.0) - p) + 0.1;
  nlohmann::ordered_json j;
  j["fit"] = "iterations_vs_n";
  j["slope"] = fit.slope;
  j["bound"] = bound;
  r.trace += json_line(j);
  r.pass = obj_ok && calls <= budget && sec < 120.0 && fit.slope <= bound && out.exit_code == exit_ok;
  r.message = "objective " + fmt("%.10g", obj) + " vs reference " + fmt("%.10g", ref.objective) + " (ratio-1 " +
              sci(obj / ref.objective - 1.0) + ", limit 1e-4); residual calls " + std::to_string(calls) +
              " (budget " + std::to_string(budget) + "); " + fmt("%.2f", sec) + " s (limit 120 s); sweep slope " +
              fmt("%.3f", fit.slope) + " (limit " + fmt("%.3f", bound) + "); " + table;
  return r;
}

inline CriterionResult sandwich(const Options& o) {
  CriterionResult r;
  std::mt19937_64 rng(o.seed + 9);
  std::normal_distribution<double> N;
  const double lo_lim = 1.0 / std::numbers::e - 1e-6, hi_lim = std::numbers::e + 1e-6;
  double lo = kInf, hi = 0.0;
  int bad = 0;
  const double cases[][2] = {{2.0, 4.0}, {2.0, 3.0}, {2.0, 6.0}, {3.0, 4.0}};
  for (int t = 0; t < 100; ++t) {
    const double p = cases[t % 4][0], s = cases[t % 4][1];
    const int n = 12, d = 3;
    Matrix A(n, d);
    Vector b(n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < d; ++j) A(i, j) = N(rng);
      b[i] = N(rng);
    }
    const RegressionInstance inst = make_regression(A, b, s, 1e-4);
    Vector xc(d), y(d), x(d), z(d);
    for (int j = 0; j < d; ++j) xc[j] = N(rng);
    const ResidualObjective f(build_residual(inst, xc));
    const double scale = std::pow(10.0, (t % 5) - 3.0);
    for (int j = 0; j < d; ++j) {
      y[j] = 0.5 * N(rng);
      x[j] = y[j] + scale * N(rng);
      z[j] = N(rng);
    }
    const double C = relative_smoothness_constant(s);
    const double num = z.dot(prox_objective_hessian(f, x, y, p, C) * z);
    const double den = z.dot(reference_hessian(f, x, y, p, C) * z);
    const double ratio = num / den;
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
    if (!(ratio >= lo_lim && ratio <= hi_lim)) ++bad;
  }
  nlohmann::ordered_json j;
  j["triples"] = 100;
  j["min_ratio"] = lo;
  j["max_ratio"] = hi;
  r.trace = json_line(j);
  r.pass = bad == 0;
  r.message = "100 triples, ratios in [" + fmt("%.4f", lo) + ", " + fmt("%.4f", hi) + "] vs [1/e, e]; " +
              std::to_string(bad) + " outside";
  return r;
}

inline CriterionResult zero_chain(const Options&) {
  CriterionResult r;
  const NemirovskiiInstance inst = make_nemirovskii(6, 12, 1.0, 2.0, 4.0, 1.0);
  const ZeroChainReport rep = verify_zero_chain(inst, inst.k, 1e-7);
  const double gstar = constrained_optimum(inst).value;
  int floor_bad = 0, provable_bad = 0;
  double worst = kInf;
  std::string first_floor;
  // Iterate i is the response to query i (x^{(0)} = 0 is iterate 0).
  for (int i = 0; i <= inst.k; ++i) {
    const Vector xi = (i == 0) ? Vector::Zero(inst.d) : rep.steps[i - 1].response;
    const double gap = eval_g(inst, xi) - gstar;
    const GapFloor fl = gap_floor(inst, i);
    worst = std::min(worst, gap - fl.per_iterate);
    if (gap < fl.per_iterate - 1e-6) {
      ++floor_bad;
      if (first_floor.empty())
        first_floor = "; iterate " + std::to_string(i) + " gap " + sci(gap) + " below floor " + sci(fl.per_iterate);
    }
    if (gap < fl.provable - 1e-6) ++provable_bad;
    nlohmann::ordered_json j;
    j["chain"] = "prox";
    j["i"] = i;
    j["support"] = static_cast<int>(support_of(xi, 1e-7).size());
    j["gap"] = gap;
    j["floor"] = fl.per_iterate;
    j["provable_floor"] = fl.provable;
    r.trace += json_line(j);
  }
  const BallHardInstance binst = make_ball_instance(6, 12, 1.0, 2.0, 0.02);
  const ZeroChainReport brep = verify_zero_chain(binst, binst.k, 1e-7);
  const double bstar = constrained_optimum(binst).value;
  int ball_bad = 0, ball_provable_bad = 0;
  for (int i = 0; i <= binst.k; ++i) {
    const Vector xi = (i == 0) ? Vector::Zero(binst.d) : brep.steps[i - 1].response;
    const double gap = binst.objective()->value(xi) - bstar;
    if (gap < ball_gap_floor(binst, i) - 1e-6) ++ball_bad;
    if (gap < ball_gap_floor_provable(binst, i) - 1e-6) ++ball_provable_bad;
    nlohmann::ordered_json j;
    j["chain"] = "ball";
    j["i"] = i;
    j["support"] = static_cast<int>(support_of(xi, 1e-7).size());
    j["gap"] = gap;
    j["floor"] = ball_gap_floor(binst, i);
    r.trace += json_line(j);
  }
  r.pass = rep.pass && rep.exact && brep.pass && brep.exact && floor_bad == 0 && ball_bad == 0;
  r.message = std::string("prox chain: at most one new coordinate ") + (rep.pass ? "yes" : "no") +
              ", exactly one " + (rep.exact ? "yes" : "no") + (rep.message.empty() ? "" : " (" + rep.message + ")") +
              "; per-iterate floor violations " + std::to_string(floor_bad) + first_floor +
              "; provable floor violations " + std::to_string(provable_bad) + "; ball chain: at most one " +
              (brep.pass ? "yes" : "no") + ", exactly one " + (brep.exact ? "yes" : "no") +
              (brep.message.empty() ? "" : " (" + brep.message + ")") + ", floor violations " +
              std::to_string(ball_bad) + ", provable floor violations " + std::to_string(ball_provable_bad);
  return r;
}

inline CriterionResult high_order(const Options& o) {
  CriterionResult r;
  RunConfig c;
  c.solver = "high-order";
  c.instance = "power4";
  c.d = 10;
  c.p = 2.0;
  c.s = 3.0;
  c.seed = o.seed;
  c.max_iterations = 100;
  // Third derivative of x^4/4 is 6x, bounded by 6 max|x0| along the run.
  c.L = 6.0 * power4_problem(c.d, c.seed).x0.cwiseAbs().maxCoeff();
  const RunOutcome out = run(c);
  r.trace = out.trace.str();
  int cert_bad = 0, rem_bad = 0;
  for (const auto& rec : out.trace.records) {
    const double dec = *rec.potential_prev - *rec.potential_next;
    if (dec < *rec.required_decrement - *rec.slack) ++cert_bad;
    if (*rec.remainder > *rec.remainder_bound * (1.0 + 1e-9) + 1e-14) ++rem_bad;
  }
  const std::size_t n = out.trace.records.size();
  r.pass = n > 0 && cert_bad == 0 && rem_bad == 0 && out.exit_code != exit_oracle;
  r.message = std::to_string(n) + " iterations, " + std::to_string(cert_bad) + " potential violations, " +
              std::to_string(rem_bad) + " remainder violations, final gap " +
              (n ? sci(*out.trace.records.back().gap) : std::string("n/a"));
  return r;
}

}  // namespace detail

inline CriterionResult run_criterion(int id, const Options& o = {});

namespace detail {

inline CriterionResult determinism(const Options& o) {
  CriterionResult r;
  std::string first, second;
  for (int id = 1; id < kCriteria; ++id) first += run_criterion(id, o).trace;
  for (int id = 1; id < kCriteria; ++id) second += run_criterion(id, o).trace;
  r.pass = !first.empty() && first == second;
  std::size_t at = 0;
  while (at < first.size() && at < second.size() && first[at] == second[at]) ++at;
  r.message = std::to_string(first.size()) + " trace bytes per run, " +
              (r.pass ? std::string("identical on repeat") : "first difference at byte " + std::to_string(at));
  return r;
}

}  // namespace detail

/// Runs one criterion. Exceptions become a failing result.
inline CriterionResult run_criterion(int id, const Options& o) {
  using Fn = CriterionResult (*)(const Options&);
  static const Fn fns[] = {nullptr,          detail::bregman,    detail::mirror,    detail::potential,
                           detail::rates,    detail::growth,     detail::lsf,       detail::ball,
                           detail::regression, detail::sandwich, detail::zero_chain, detail::high_order,
                           detail::determinism};
  const auto t0 = std::chrono::steady_clock::now();
  CriterionResult r;
  try {
    r = fns[id](o);
  } catch (const std::exception& e) {
    r.pass = false;
    r.message = std::string("error: ") + e.what();
  }
  r.id = id;
  r.name = criterion_name(id);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

inline std::string format(const CriterionResult& r) {
  return "criterion " + std::to_string(r.id) + " [" + r.name + "]: " + (r.pass ? "PASS" : "FAIL") + " (" +
         r.message + ")";
}

}  // namespace lpacc::acceptance
