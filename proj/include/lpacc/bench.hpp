#pragma once

#include "lpacc/accel.hpp"
#include "lpacc/core.hpp"
#include "lpacc/hardness.hpp"
#include "lpacc/io.hpp"
#include "lpacc/objective.hpp"
#include "lpacc/regression.hpp"
#include "lpacc/trace.hpp"

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace lpacc {

inline constexpr const char* kVersion = "0.1.0";
/// Bumped whenever a synthetic generator changes its output.
inline constexpr int kGeneratorVersion = 1;

enum ExitCode : int { exit_ok = 0, exit_parse = 2, exit_oracle = 3, exit_budget = 4, exit_certification = 5 };

struct RunConfig {
  /// prox, prox-lsf, ball, high-order or regression.
  std::string solver = "prox";
  /// quartic, hard, power4 or diag-quadratic for the accelerated solvers;
  /// gaussian or file for regression.
  std::string instance = "quartic";
  double p = 2.0;
  double s = 4.0;
  double lambda = 1.0;
  /// Ball-oracle radius r.
  double radius = 0.1;
  int d = 10;
  int k = 6;
  int n = 256;
  /// Weight of the quadratic term of the quartic instance.
  double mu = 1.0;
  /// Domain radius of the hard instances.
  double R = 1.0;
  std::uint64_t seed = 7;
  int max_iterations = 100;
  double oracle_tol = 1e-10;
  double ls_tol = 1e-3;
  double epsilon = 1e-4;
  double psi_hat = 1.0;
  double a_min = 1e-2;
  /// Initial smoothness constant of the high-order method.
  double L = 1.0;
  /// Regression: residual-problem prox realized by the generic oracle.
  bool generic_oracle = false;
  bool warm_start = true;
  std::string path;
  std::string b_path;
  bool record_time = false;
};

inline void validate(const RunConfig& c) {
  const std::vector<std::string> solvers{"prox", "prox-lsf", "ball", "high-order", "regression"};
  require(std::find(solvers.begin(), solvers.end(), c.solver) != solvers.end(), "unknown solver '" + c.solver + "'");
  require(c.p >= 2.0 && std::isfinite(c.p), "p must be >= 2");
  require(c.max_iterations >= 0, "max_iterations must be >= 0");
  require(c.oracle_tol > 0.0 && c.ls_tol > 0.0, "tolerances must be positive");
  if (c.solver == "regression") {
    require(c.instance == "gaussian" || c.instance == "file", "regression needs instance 'gaussian' or 'file'");
    require(c.s > c.p, "regression needs s > p");
    require(c.epsilon > 0.0, "epsilon must be positive");
    if (c.instance == "gaussian") require(c.n >= c.d && c.d >= 1, "gaussian instance needs n >= d >= 1");
    if (c.instance == "file") require(!c.path.empty(), "instance 'file' needs a path");
    return;
  }
  const std::vector<std::string> inst{"quartic", "hard", "power4", "diag-quadratic"};
  require(std::find(inst.begin(), inst.end(), c.instance) != inst.end(),
          "unknown instance '" + c.instance + "' for solver " + c.solver);
  require(c.d >= 1, "d must be >= 1");
  if (c.solver == "ball") {
    require(c.radius > 0.0, "ball radius must be positive");
  } else if (c.solver == "high-order") {
    require(c.s == std::floor(c.s) && c.s >= c.p, "high-order needs integer s >= p");
    require(c.L > 0.0, "L must be positive");
  } else {
    require(c.s > c.p && std::isfinite(c.s), "s must be finite and > p");
    require(c.lambda > 0.0, "lambda must be positive");
  }
  if (c.solver == "prox-lsf") require(c.psi_hat > 0.0 && c.a_min > 0.0, "psi_hat and a_min must be positive");
  if (c.instance == "hard") {
    require(c.k >= 1 && c.d >= c.k, "hard instance needs 1 <= k <= d");
    require(c.R > 0.0, "R must be positive");
    require(c.solver == "prox" || c.solver == "prox-lsf" || c.solver == "ball",
            "hard instances are for the prox, prox-lsf and ball solvers");
  }
}

struct SyntheticProblem {
  ObjectivePtr f;
  Vector x0;
  Reference reference;
  /// Domain constraint for the oracles, if any.
  std::optional<double> radius;
};

inline Vector gaussian_vector(std::mt19937_64& rng, Index d) {
  std::normal_distribution<double> N(0.0, 1.0);
  Vector v(d);
  for (Index i = 0; i < d; ++i) v[i] = N(rng);
  return v;
}

/// ‖x‖_4^4 + μ‖x‖_2^2 from a standard normal start. The minimizer sits at
/// the origin so that gaps keep full relative accuracy down to underflow.
inline SyntheticProblem quartic_problem(int d, double mu, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Vector x0 = gaussian_vector(rng, d);
  const Vector c = Vector::Zero(d);
  std::vector<ObjectivePtr> parts{std::make_shared<SeparablePowerObjective>(Vector::Ones(d), c, 4.0)};
  if (mu > 0.0) parts.push_back(std::make_shared<SeparablePowerObjective>(Vector::Constant(d, mu), c, 2.0));
  return {std::make_shared<SumObjective>(parts), x0, Reference{c, 0.0}, std::nullopt};
}

/// Σ x_i^4 / 4 from a standard normal start.
inline SyntheticProblem power4_problem(int d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Vector x0 = gaussian_vector(rng, d);
  return {std::make_shared<SeparablePowerObjective>(Vector::Constant(d, 0.25), Vector::Zero(d), 4.0), x0,
          Reference{Vector::Zero(d), 0.0}, std::nullopt};
}

/// Σ w_i (x_i - c_i)^2 with w_i = 10^{-2i/(d-1)} and c a random unit vector,
/// started at 0.
inline SyntheticProblem diag_quadratic_problem(int d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Vector c = gaussian_vector(rng, d);
  c /= c.norm();
  Vector w(d);
  for (int i = 0; i < d; ++i) w[i] = (d == 1) ? 1.0 : std::pow(10.0, -2.0 * i / (d - 1));
  return {std::make_shared<SeparablePowerObjective>(w, c, 2.0), Vector::Zero(d), Reference{c, 0.0}, std::nullopt};
}

inline SyntheticProblem hard_problem(const RunConfig& c) {
  if (c.solver == "ball") {
    const BallHardInstance inst = make_ball_instance(c.k, c.d, c.R, c.p, c.radius);
    const auto opt = constrained_optimum(inst);
    return {inst.objective(), Vector::Zero(c.d), Reference{opt.x, opt.value}, c.R};
  }
  const NemirovskiiInstance inst = make_nemirovskii(c.k, c.d, c.R, c.p, c.s, c.lambda);
  const auto opt = constrained_optimum(inst);
  return {inst.objective(), Vector::Zero(c.d), Reference{opt.x, opt.value}, c.R};
}

inline SyntheticProblem synthetic_problem(const RunConfig& c) {
  if (c.instance == "quartic") return quartic_problem(c.d, c.mu, c.seed);
  if (c.instance == "power4") return power4_problem(c.d, c.seed);
  if (c.instance == "diag-quadratic") return diag_quadratic_problem(c.d, c.seed);
  return hard_problem(c);
}

/// n×d standard normal A and b.
inline RegressionInstance gaussian_regression(int n, int d, double s, double epsilon, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N(0.0, 1.0);
  Matrix A(n, d);
  Vector b(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) A(i, j) = N(rng);
    b[i] = N(rng);
  }
  return make_regression(std::move(A), std::move(b), s, epsilon);
}

inline nlohmann::ordered_json config_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["solver"] = c.solver;
  j["instance"] = c.instance;
  j["p"] = c.p;
  j["s"] = c.s;
  j["lambda"] = c.lambda;
  j["radius"] = c.radius;
  j["d"] = c.d;
  j["k"] = c.k;
  j["n"] = c.n;
  j["mu"] = c.mu;
  j["R"] = c.R;
  j["seed"] = c.seed;
  j["max_iterations"] = c.max_iterations;
  j["oracle_tol"] = c.oracle_tol;
  j["ls_tol"] = c.ls_tol;
  j["epsilon"] = c.epsilon;
  j["psi_hat"] = c.psi_hat;
  j["a_min"] = c.a_min;
  j["L"] = c.L;
  j["generic_oracle"] = c.generic_oracle;
  j["warm_start"] = c.warm_start;
  if (!c.path.empty()) j["path"] = c.path;
  if (!c.b_path.empty()) j["b_path"] = c.b_path;
  return j;
}

/// Counts of certificate violations recomputed from the records alone.
struct CertificateSummary {
  int potential = 0;
  int growth = 0;
  int envelope = 0;
  int remainder = 0;
  int total() const { return potential + growth + envelope + remainder; }
};

inline CertificateSummary check_records(const std::vector<IterationRecord>& recs, const std::string& solver,
                                        const std::optional<PNormParams>& params, std::optional<double> psi0) {
  CertificateSummary c;
  for (const auto& r : recs) {
    if (r.certified && !*r.certified) ++c.potential;
    const bool growth_applies = solver != "prox-lsf" || (r.step_case && *r.step_case == 1);
    if (growth_applies && r.growth && r.growth_floor && *r.growth < *r.growth_floor - 1e-10) ++c.growth;
    if (solver == "prox" && params && psi0 && r.gap && *r.gap > rate_envelope(*params, *psi0, r.t + 1) * 1.001)
      ++c.envelope;
    if (r.remainder && r.remainder_bound && *r.remainder > *r.remainder_bound * (1.0 + 1e-9) + 1e-14) ++c.remainder;
  }
  return c;
}

struct RunOutcome {
  Trace trace;
  RunStatus status = RunStatus::completed;
  CertificateSummary violations;
  int exit_code = exit_ok;
  std::string message;
};

inline int exit_code_for(RunStatus st, const CertificateSummary& v) {
  if (st == RunStatus::oracle_failure || st == RunStatus::line_search_failure) return exit_oracle;
  if (st == RunStatus::budget_exhausted) return exit_budget;
  if (v.total() > 0) return exit_certification;
  return exit_ok;
}

inline RunOutcome run_regression(const RunConfig& c) {
  const RegressionInstance inst =
      c.instance == "file"
          ? io::load_instance(c.path, c.s, c.epsilon,
                              c.b_path.empty() ? std::nullopt : std::optional<std::filesystem::path>(c.b_path))
          : gaussian_regression(c.n, c.d, c.s, c.epsilon, c.seed);
  RefinementOptions ro;
  ro.residual.p = c.p;
  ro.residual.ls_tol = c.ls_tol;
  ro.residual.warm_start = c.warm_start;
  ro.residual.generic_oracle = c.generic_oracle;
  const RefinementReport rep = iterative_refinement(inst, ro);
  RunOutcome out;
  out.status = rep.status;
  out.message = rep.message;
  out.trace.header = config_json(c);
  out.trace.header["n"] = inst.n();
  out.trace.header["d"] = inst.d();
  out.trace.header["s"] = inst.s;
  out.trace.header["version"] = kVersion;
  out.trace.header["generator"] = kGeneratorVersion;
  for (const auto& cy : rep.cycles) out.trace.cycles.push_back(to_json(cy));
  auto& sm = out.trace.summary;
  sm["status"] = to_string(rep.status);
  sm["message"] = rep.message;
  sm["objective"] = rep.objective;
  sm["lower_bound"] = rep.lower_bound;
  sm["cycles"] = rep.cycles.size();
  sm["residual_calls"] = rep.residual_calls;
  sm["iterations"] = rep.total_iterations;
  sm["oracle_calls"] = rep.total_oracle_calls;
  sm["inner_solves"] = rep.total_inner_solves;
  sm["rank_deficient"] = rep.rank_deficient;
  out.exit_code = exit_code_for(rep.status, out.violations);
  sm["exit_code"] = out.exit_code;
  return out;
}

/// Runs one configured solve and returns its trace. Exceptions from invalid
/// configurations propagate as DomainError.
inline RunOutcome run(const RunConfig& c) {
  validate(c);
  if (c.solver == "regression") return run_regression(c);
  const SyntheticProblem prob = synthetic_problem(c);
  RunResult res;
  std::optional<PNormParams> params;
  if (c.solver == "prox") {
    RunOptions o;
    o.max_iterations = c.max_iterations;
    o.oracle_tol = c.oracle_tol;
    o.ls_tol = c.ls_tol;
    o.reference = prob.reference;
    o.radius = prob.radius;
    o.record_time = c.record_time;
    params = PNormParams::finite(c.p, c.s, c.lambda);
    res = run_prox_solver(*prob.f, prob.x0, *params, o);
  } else if (c.solver == "prox-lsf") {
    LsfOptions o;
    o.max_iterations = c.max_iterations;
    o.oracle_tol = c.oracle_tol;
    o.reference = prob.reference;
    o.radius = prob.radius;
    o.record_time = c.record_time;
    o.psi_hat = c.psi_hat;
    o.a_min = c.a_min;
    params = PNormParams::finite(c.p, c.s, c.lambda);
    res = run_lsf_solver(*prob.f, prob.x0, *params, o);
  } else if (c.solver == "ball") {
    RunOptions o;
    o.max_iterations = c.max_iterations;
    o.oracle_tol = c.oracle_tol;
    o.ls_tol = c.ls_tol;
    o.reference = prob.reference;
    o.radius = prob.radius;
    o.record_time = c.record_time;
    res = run_ball_solver(*prob.f, prob.x0, c.radius, c.p, o);
  } else {
    HighOrderOptions o;
    o.max_iterations = c.max_iterations;
    o.oracle_tol = c.oracle_tol;
    o.ls_tol = c.ls_tol;
    o.reference = prob.reference;
    o.record_time = c.record_time;
    o.L = c.L;
    o.s = static_cast<int>(c.s);
    res = run_high_order(*prob.f, prob.x0, c.p, o);
  }
  RunOutcome out;
  out.status = res.status;
  out.message = res.message;
  out.violations = check_records(res.records, c.solver, params, res.psi0);
  out.trace.header = config_json(c);
  out.trace.header["version"] = kVersion;
  out.trace.header["generator"] = kGeneratorVersion;
  out.trace.records = std::move(res.records);
  auto& sm = out.trace.summary;
  sm["status"] = to_string(res.status);
  sm["message"] = res.message;
  sm["iterations"] = out.trace.records.size();
  if (res.psi0) sm["psi0"] = *res.psi0;
  sm["f_star"] = prob.reference.f_star;
  if (!out.trace.records.empty()) {
    sm["final_objective"] = out.trace.records.back().objective;
    if (out.trace.records.back().gap) sm["final_gap"] = *out.trace.records.back().gap;
  }
  sm["potential_violations"] = out.violations.potential;
  sm["growth_violations"] = out.violations.growth;
  sm["envelope_violations"] = out.violations.envelope;
  sm["remainder_violations"] = out.violations.remainder;
  out.exit_code = exit_code_for(res.status, out.violations);
  sm["exit_code"] = out.exit_code;
  return out;
}

}  // namespace lpacc
