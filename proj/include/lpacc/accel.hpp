#pragma once

#include "lpacc/core.hpp"
#include "lpacc/geometry.hpp"
#include "lpacc/objective.hpp"
#include "lpacc/oracle.hpp"
#include "lpacc/pnorm.hpp"
#include "lpacc/roots.hpp"
#include "lpacc/trace.hpp"

#include <chrono>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace lpacc {

/// Positive root a of factor · λ · a^p = (A + a)^{p-1}.
inline double solve_coefficient(double A, double lambda, double p, double factor = 5.0) {
  require(A >= 0.0 && std::isfinite(A), "solve_coefficient: A must be finite and >= 0");
  require(lambda > 0.0 && std::isfinite(lambda), "solve_coefficient: lambda must be positive");
  require(p >= 2.0 && factor > 0.0, "solve_coefficient: need p >= 2 and factor > 0");
  const double fl = factor * lambda;
  if (A == 0.0) return 1.0 / fl;
  if (p == 2.0) return (1.0 + std::sqrt(1.0 + 4.0 * fl * A)) / (2.0 * fl);
  // g(u) = log(fl) + p u - (p-1) log(A + e^u) is increasing and concave in
  // u = log a, so Newton started left of the root climbs to it monotonically.
  double u = ((p - 1.0) * std::log(A) - std::log(fl)) / p;
  for (int it = 0; it < 200; ++it) {
    const double a = std::exp(u);
    const double g = std::log(fl) + p * u - (p - 1.0) * std::log(A + a);
    const double dg = p - (p - 1.0) * a / (A + a);
    const double step = g / dg;
    u -= step;
    if (std::abs(step) <= 1e-15 * std::max(1.0, std::abs(u))) break;
  }
  return std::exp(u);
}

/// argmin_z ⟨w, z⟩ + ω_p(z, y0) in plain coordinates.
inline Vector mirror_step(const Vector& w, const Vector& y0, double p) {
  return IdentityGeometry(p).mirror_step(w, y0);
}

/// Upper envelope on f(x_T) - f* for the line-searched method:
/// (s/(s-p))^{s(1+ν)} λ Ψ_0^{s/p} / T^{s(1+ν)}.
inline double rate_envelope(const PNormParams& params, double psi0, int T) {
  const double e = params.rate_exponent();
  return std::pow(params.s / (params.s - params.p), e) * params.lambda *
         std::pow(psi0, params.s / params.p) / std::pow(static_cast<double>(T), e);
}

/// A_next^{1/p} - A_prev^{1/p} without cancellation.
inline double root_growth(double A_prev, double a, double p) {
  if (A_prev == 0.0) return std::pow(a, 1.0 / p);
  return std::pow(A_prev, 1.0 / p) * std::expm1(std::log1p(a / A_prev) / p);
}

/// Known optimum used to certify potentials; never used by the iteration.
struct Reference {
  Vector x_star;
  double f_star = 0.0;
};

struct AccelState {
  int t = 0;
  double A = 0.0;
  Vector x;
  Vector z;
  Vector y0;
  /// Σ a_i ∇f(x_i); the line-search-free method folds β_i into a_i.
  Vector w;
};

enum class RunStatus {
  completed,
  converged,
  oracle_failure,
  line_search_failure,
  budget_exhausted,
};

inline const char* to_string(RunStatus s) {
  switch (s) {
    case RunStatus::completed: return "completed";
    case RunStatus::converged: return "converged";
    case RunStatus::oracle_failure: return "oracle_failure";
    case RunStatus::line_search_failure: return "line_search_failure";
    case RunStatus::budget_exhausted: return "budget_exhausted";
  }
  return "unknown";
}

struct RunOptions {
  int max_iterations = 100;
  /// Stop when the dual norm of ∇f(x_t) drops to this (smooth f only).
  double grad_tol = 0.0;
  /// Relative consistency demanded of the implicit λ_t.
  double ls_tol = 1e-3;
  double oracle_tol = 1e-10;
  int max_line_search_evals = 200;
  std::optional<Reference> reference;
  /// Potential checks allow this much slack, relative to Ψ_0.
  double certify_slack = 1e-7;
  /// Constrain every oracle call to ‖x‖_p <= radius.
  std::optional<double> radius;
  bool record_time = false;
};

struct RunResult {
  RunStatus status = RunStatus::completed;
  std::string message;
  AccelState state;
  std::vector<IterationRecord> records;
  /// Ψ_0 = ω(x*, x_0) when a reference was supplied.
  std::optional<double> psi0;

  bool all_certified() const {
    for (const auto& r : records)
      if (r.certified && !*r.certified) return false;
    return true;
  }
};

/// Output of one inner oracle call made on behalf of the outer loop.
struct StepOutcome {
  Vector x;
  /// The (sub)gradient the mirror step accumulates.
  Vector grad;
  /// What the implicit λ_t must equal for this step to be consistent.
  double implied_lambda = 0.0;
  int inner_iterations = 0;
  std::optional<bool> at_boundary;
  std::optional<double> kkt_residual;
};

struct LineSearchResult {
  double lambda_t = 0.0;
  double a = 0.0;
  Vector y;
  StepOutcome step;
  int evaluations = 0;
  bool converged = false;
  /// y_t was already stationary (the step did not move).
  bool stationary = false;
};

/// Solves the implicit system a = a(λ_t), y = (A x + a z)/(A + a),
/// λ_t = step(y, λ_t).implied_lambda by a bracketed search on log λ_t.
/// The consistency gap is decreasing in λ_t: large λ_t shrinks a, pulls y to
/// x and the step to zero length.
template <class Step>
LineSearchResult line_search_lambda(Step&& step, double A, const Vector& x, const Vector& z, double p,
                                    double lambda_guess, double ls_tol, int max_evals,
                                    double factor = 5.0) {
  LineSearchResult best;
  double best_gap = kInf;
  int evals = 0;
  auto h = [&](double lam) {
    ++evals;
    LineSearchResult cur;
    cur.lambda_t = lam;
    cur.a = solve_coefficient(A, lam, p, factor);
    cur.y = (A * x + cur.a * z) / (A + cur.a);
    cur.step = step(cur.y, lam);
    double val;
    if (cur.step.implied_lambda <= 0.0) {
      cur.stationary = true;
      val = 0.0;
    } else {
      val = std::log(lam) - std::log(cur.step.implied_lambda);
    }
    if (std::abs(val) < best_gap) {
      best_gap = std::abs(val);
      best = std::move(cur);
    }
    return val;
  };
  const RootResult root = find_root_log(h, lambda_guess, std::log1p(ls_tol), max_evals);
  best.evaluations = evals;
  best.converged = root.converged || best.stationary;
  return best;
}

namespace detail {

inline double elapsed(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// Ψ = A (f(x) - f*) + ω(x*, z), from the already evaluated f(x).
template <class Geometry>
double potential(const Reference& ref, const Geometry& geom, double A, const Vector& z, double fx) {
  return A * (fx - ref.f_star) + geom.omega(ref.x_star, z);
}

template <class Geometry>
void init_state(AccelState& st, const Vector& x0) {
  st.t = 0;
  st.A = 0.0;
  st.x = x0;
  st.z = x0;
  st.y0 = x0;
  st.w = Vector::Zero(x0.size());
}

template <class Geometry>
bool stationary_start(const Objective& f, const Geometry& geom, const Vector& x, double grad_tol) {
  if (grad_tol <= 0.0 || f.tag() == SmoothnessTag::piecewise_linear_max) return false;
  return geom.dual_norm(f.gradient(x)) <= grad_tol;
}

// Shared driver for the methods whose λ_t comes from the implicit line
// search: the line-searched prox method, the ball method and the high-order
// method. `step` maps (y, λ_t) to the oracle output; `annotate` may add
// method-specific fields to the record and can request a retry of the
// iteration (returns false) after adjusting its own parameters. `stop` is
// asked before every iteration whether the current state is good enough.
inline bool never_stop(const AccelState&) { return false; }

template <class Geometry, class Step, class Annotate, class Stop = bool (*)(const AccelState&)>
RunResult run_line_searched(const Objective& f, const Vector& x_init, double p, double lambda_guess,
                            const Geometry& geom, const RunOptions& opt, Step&& step, Annotate&& annotate,
                            Stop&& stop = never_stop) {
  require_finite(x_init, "x_init");
  require(x_init.size() == f.dim(), "x_init dimension mismatch");
  require(opt.max_iterations >= 0, "max_iterations must be >= 0");
  RunResult out;
  AccelState& st = out.state;
  init_state<Geometry>(st, x_init);
  const auto t0 = std::chrono::steady_clock::now();
  double fx = f.value(st.x);
  std::optional<double> pot;
  double slack = 0.0;
  if (opt.reference) {
    out.psi0 = geom.omega(opt.reference->x_star, x_init);
    slack = opt.certify_slack * *out.psi0;
    pot = potential(*opt.reference, geom, st.A, st.z, fx);
  }
  double guess = lambda_guess;
  try {
    for (int t = 0; t < opt.max_iterations; ++t) {
      if (stationary_start(f, geom, st.x, opt.grad_tol) || stop(st)) {
        out.status = RunStatus::converged;
        break;
      }
      LineSearchResult ls;
      IterationRecord rec;
      bool accepted = false;
      for (int attempt = 0; attempt < 40 && !accepted; ++attempt) {
        ls = line_search_lambda(step, st.A, st.x, st.z, p, guess, opt.ls_tol, opt.max_line_search_evals);
        if (!ls.converged) {
          out.status = RunStatus::line_search_failure;
          out.message = "line search did not reach consistency at t=" + std::to_string(t);
          return out;
        }
        rec = IterationRecord{};
        rec.t = t;
        rec.a = ls.a;
        rec.A_prev = st.A;
        rec.A_next = st.A + ls.a;
        rec.lambda_t = ls.lambda_t;
        rec.step_norm = geom.norm(ls.step.x - ls.y);
        rec.oracle_calls = ls.evaluations;
        rec.inner_iterations = ls.step.inner_iterations;
        rec.at_boundary = ls.step.at_boundary;
        rec.kkt_residual = ls.step.kkt_residual;
        accepted = annotate(rec, ls);
      }
      if (!accepted) {
        out.status = RunStatus::oracle_failure;
        out.message = "step rejected repeatedly at t=" + std::to_string(t);
        return out;
      }
      st.w += ls.a * ls.step.grad;
      const Vector z_next = geom.mirror_step(st.w, st.y0);
      const double fx_next = f.value(ls.step.x);
      rec.objective = fx_next;
      rec.growth = root_growth(st.A, ls.a, p);
      if (opt.reference) {
        rec.gap = fx_next - opt.reference->f_star;
        rec.potential_prev = pot;
        const double pot_next = potential(*opt.reference, geom, rec.A_next, z_next, fx_next);
        rec.potential_next = pot_next;
        if (!rec.required_decrement) rec.required_decrement = rec.A_next * ls.lambda_t * std::pow(rec.step_norm, p);
        rec.slack = slack;
        rec.certified = pot_next <= *pot - *rec.required_decrement + slack;
        pot = pot_next;
      }
      if (opt.record_time) rec.wall_time = elapsed(t0);
      out.records.push_back(rec);
      st.A = rec.A_next;
      st.x = ls.step.x;
      st.z = z_next;
      st.t = t + 1;
      fx = fx_next;
      guess = ls.lambda_t;
      if (ls.stationary) {
        out.status = RunStatus::converged;
        break;
      }
    }
  } catch (const OracleFailure& e) {
    out.status = RunStatus::oracle_failure;
    out.message = e.what();
  }
  return out;
}

}  // namespace detail

/// Line-searched accelerated prox method with the s-power oracle realized
/// through the p-power oracle at the implicit weight λ_t = λ‖x_{t+1} - y_t‖^{s-p}.
template <class Geometry>
RunResult run_prox_solver(const Objective& f, const Vector& x_init, const PNormParams& params,
                          const Geometry& geom, const RunOptions& opt = {}) {
  require(!params.is_ball() && params.s >= params.p, "run_prox_solver: need finite s >= p");
  const double p = params.p, s = params.s, lambda = params.lambda;
  auto step = [&](const Vector& y, double lam) {
    ProxResult r = solve_prox_ppower(f, y, lam, geom, opt.oracle_tol, opt.radius);
    StepOutcome o;
    const double n = geom.norm(r.x - y);
    o.implied_lambda = (s == p) ? lambda : lambda * std::pow(n, s - p);
    if (n == 0.0) o.implied_lambda = 0.0;
    o.x = std::move(r.x);
    o.grad = std::move(r.subgradient);
    o.inner_iterations = r.inner_iterations;
    return o;
  };
  auto annotate = [&](IterationRecord& rec, const LineSearchResult& ls) {
    rec.growth_floor = 1.0 / (5.0 * p * std::pow(ls.lambda_t, 1.0 / p));
    return true;
  };
  return detail::run_line_searched(f, x_init, p, lambda, geom, opt, step, annotate);
}

inline RunResult run_prox_solver(const Objective& f, const Vector& x_init, const PNormParams& params,
                                 const RunOptions& opt = {}) {
  return run_prox_solver(f, x_init, params, IdentityGeometry(params.p), opt);
}

/// Accelerated ball method: the ball oracle replaces the prox and λ_t is
/// pinned by the boundary multiplier, ∇f(x_{t+1}) = -λ_t p Φ(x_{t+1} - y_t).
/// Stops early when an oracle call lands on the global minimizer.
inline RunResult run_ball_solver(const Objective& f, const Vector& x_init, double r, double p,
                                 const RunOptions& opt = {}) {
  require(r > 0.0, "run_ball_solver: radius must be positive");
  const IdentityGeometry geom(p);
  auto step = [&](const Vector& y, double) {
    BallResult b = solve_ball(f, y, r, p, opt.oracle_tol, opt.radius);
    StepOutcome o;
    o.implied_lambda = b.at_boundary ? b.lambda / p : 0.0;
    o.at_boundary = b.at_boundary;
    if (b.at_boundary) {
      // Recomputed from the returned point: ‖∇f(x) + μΦ(x - y)‖_q relative to ‖∇f(x)‖_q.
      const double g = dual_norm(b.subgradient, p);
      o.kkt_residual = dual_norm(b.subgradient + b.lambda * phi(b.x - y, p), p) / (g > 0.0 ? g : 1.0);
    }
    o.x = std::move(b.x);
    o.grad = std::move(b.subgradient);
    o.inner_iterations = b.inner_iterations;
    return o;
  };
  auto annotate = [&](IterationRecord& rec, const LineSearchResult& ls) {
    if (!ls.stationary) rec.growth_floor = 1.0 / (5.0 * p * std::pow(ls.lambda_t, 1.0 / p));
    // An interior answer is the global minimizer; with no multiplier the
    // potential need only not increase.
    if (!ls.step.at_boundary.value_or(false)) rec.required_decrement = 0.0;
    return true;
  };
  const double guess = std::max(dual_norm(f.gradient(x_init), p), 1e-12) / (p * std::pow(r, p - 1.0));
  return detail::run_line_searched(f, x_init, p, guess, geom, opt, step, annotate);
}

struct HighOrderOptions : RunOptions {
  /// Smoothness constant of the (s-1)-th derivative; doubled whenever the
  /// Taylor remainder bound fails at an accepted step.
  double L = 1.0;
  int s = 3;
};

/// Line-searched high-order method: the Taylor oracle with weight
/// 2L/(p (s-1)!) replaces the prox and λ_t = (2L/(s-1)!) ‖x_{t+1} - y_t‖^{s-p}.
inline RunResult run_high_order(const Objective& f, const Vector& x_init, double p, const HighOrderOptions& opt) {
  require(opt.s >= 2 && p >= 2.0 && opt.s >= p, "run_high_order: need integer s >= p >= 2");
  const IdentityGeometry geom(p);
  const double s = opt.s;
  double L = opt.L;
  auto step = [&](const Vector& y, double) {
    ProxResult r = solve_taylor(f, y, L, s, p, opt.oracle_tol);
    StepOutcome o;
    const double n = pnorm(r.x - y, p);
    o.implied_lambda = (n == 0.0) ? 0.0 : 2.0 * L / std::tgamma(s) * std::pow(n, s - p);
    o.x = std::move(r.x);
    o.grad = std::move(r.subgradient);
    o.inner_iterations = r.inner_iterations;
    return o;
  };
  auto annotate = [&](IterationRecord& rec, const LineSearchResult& ls) {
    const int order = opt.s - 1;
    const Vector diff = f.gradient(ls.step.x) - f.taylor_grad(ls.step.x, ls.y, order);
    rec.remainder = dual_norm(diff, p);
    rec.remainder_bound = L / std::tgamma(s) * std::pow(rec.step_norm, s - 1.0);
    rec.smoothness = L;
    if (*rec.remainder > *rec.remainder_bound * (1.0 + 1e-9) + 1e-14) {
      L *= 2.0;
      return false;
    }
    rec.growth_floor = 1.0 / (5.0 * p * std::pow(ls.lambda_t, 1.0 / p));
    rec.required_decrement = 0.5 * rec.A_next * ls.lambda_t * std::pow(rec.step_norm, p);
    return true;
  };
  return detail::run_line_searched(f, x_init, p, 2.0 * L / std::tgamma(s), geom, opt, step, annotate);
}

struct LsfOptions : RunOptions {
  /// Guess of Ψ_0 = ω(x*, x_0) used by the λ̄ schedule.
  double psi_hat = 1.0;
  /// Floor on A when evaluating the schedule (A_0 = 0 would give λ̄ = ∞).
  double a_min = 1e-2;
  /// Double psi_hat and restart when the certified decrements of the
  /// "β < 1" iterations add up to more than psi_hat, which proves psi_hat < Ψ_0.
  bool restart_on_excess = true;
};

/// λ̄ = A^{-(s-p)(p+1)/D} Ψ̂^{p(s-p)/D} λ^{p²/D} with D = ps - p + s.
inline double lsf_lambda_bar(double A, double psi_hat, const PNormParams& params) {
  const double p = params.p, s = params.s;
  const double D = p * s - p + s;
  return std::pow(A, -(s - p) * (p + 1.0) / D) * std::pow(psi_hat, p * (s - p) / D) *
         std::pow(params.lambda, p * p / D);
}

/// Line-search-free accelerated prox method. Each iteration makes one oracle
/// call; a step longer than the schedule predicts is damped by β < 1.
template <class Geometry>
RunResult run_lsf_solver(const Objective& f, const Vector& x_init, const PNormParams& params,
                         const Geometry& geom, const LsfOptions& opt) {
  require(!params.is_ball() && params.s > params.p, "run_lsf_solver: need finite s > p");
  require(opt.psi_hat > 0.0 && opt.a_min > 0.0, "run_lsf_solver: psi_hat and a_min must be positive");
  require_finite(x_init, "x_init");
  const double p = params.p, s = params.s, lambda = params.lambda;
  const double factor = std::pow(3.0 * p, p);
  const double case2_const = std::pow(3.0 * p, -p / (p - 1.0)) * std::pow(lambda, -p / (s - p));
  const ProxQuery base{x_init, PNormParams::finite(p, s, p / s * lambda), opt.radius, opt.oracle_tol};

  RunResult out;
  AccelState& st = out.state;
  const auto t0 = std::chrono::steady_clock::now();
  double psi_hat = opt.psi_hat;
  int phase = 0;
  std::optional<double> pot;
  double slack = 0.0;
  if (opt.reference) {
    out.psi0 = geom.omega(opt.reference->x_star, x_init);
    slack = opt.certify_slack * *out.psi0;
  }
  auto reset = [&]() {
    detail::init_state<Geometry>(st, x_init);
    if (opt.reference) pot = detail::potential(*opt.reference, geom, 0.0, st.z, f.value(st.x));
  };
  reset();
  double anchor = opt.a_min;
  double lambda_bar = lsf_lambda_bar(anchor, psi_hat, params);
  double banked = 0.0;
  bool restarted = false;
  try {
    for (int t = 0; t < opt.max_iterations; ++t) {
      if (detail::stationary_start(f, geom, st.x, opt.grad_tol)) {
        out.status = RunStatus::converged;
        break;
      }
      if (st.A >= 2.0 * anchor) {
        anchor = std::max(st.A, opt.a_min);
        lambda_bar = lsf_lambda_bar(anchor, psi_hat, params);
      }
      const double a = solve_coefficient(st.A, lambda_bar, p, factor);
      const double A_prime = st.A + a;
      const Vector y = (st.A * st.x + a * st.z) / A_prime;
      ProxQuery q = base;
      q.center = y;
      const ProxResult r = solve_prox(f, q, geom);
      const double n = geom.norm(r.x - y);
      const double lam_next = lambda * std::pow(n, s - p);
      const double beta = (lam_next <= lambda_bar) ? 1.0 : lambda_bar / lam_next;
      st.w += a * beta * r.subgradient;
      const Vector z_next = geom.mirror_step(st.w, st.y0);
      const double A_next = st.A + beta * a;
      const Vector x_next = ((1.0 - beta) * st.A * st.x + beta * A_prime * r.x) / A_next;
      const double fx_next = f.value(x_next);

      IterationRecord rec;
      rec.t = t;
      rec.a = a;
      rec.A_prev = st.A;
      rec.A_next = A_next;
      rec.A_prime = A_prime;
      rec.lambda_t = lam_next;
      rec.lambda_bar = lambda_bar;
      rec.beta = beta;
      rec.step_norm = n;
      rec.objective = fx_next;
      rec.oracle_calls = 1;
      rec.inner_iterations = r.inner_iterations;
      rec.phase = phase;
      rec.step_case = (beta == 1.0) ? 1 : 2;
      rec.growth = root_growth(st.A, beta * a, p);
      double decrement = 0.0;
      if (beta == 1.0) {
        rec.growth_floor = 1.0 / (std::pow(3.0 * p, p + 1.0) * std::pow(lambda_bar, 1.0 / p));
      } else {
        decrement = case2_const * A_prime * std::pow(lambda_bar, s / (s - p));
      }
      if (opt.reference) {
        rec.gap = fx_next - opt.reference->f_star;
        rec.potential_prev = pot;
        const double pot_next = detail::potential(*opt.reference, geom, A_next, z_next, fx_next);
        rec.potential_next = pot_next;
        rec.required_decrement = decrement;
        rec.slack = slack;
        rec.certified = pot_next <= *pot - decrement + slack;
        pot = pot_next;
      }
      if (opt.record_time) rec.wall_time = detail::elapsed(t0);
      st.A = A_next;
      st.x = x_next;
      st.z = z_next;
      st.t = t + 1;
      banked += decrement;
      if (opt.restart_on_excess && banked > psi_hat) {
        psi_hat *= 2.0;
        ++phase;
        rec.restart = true;
        restarted = true;
      }
      out.records.push_back(rec);
      if (restarted) {
        reset();
        anchor = opt.a_min;
        lambda_bar = lsf_lambda_bar(anchor, psi_hat, params);
        banked = 0.0;
        restarted = false;
        continue;
      }
      if (n == 0.0) {
        out.status = RunStatus::converged;
        break;
      }
    }
  } catch (const OracleFailure& e) {
    out.status = RunStatus::oracle_failure;
    out.message = e.what();
  }
  return out;
}

inline RunResult run_lsf_solver(const Objective& f, const Vector& x_init, const PNormParams& params,
                                const LsfOptions& opt) {
  return run_lsf_solver(f, x_init, params, IdentityGeometry(params.p), opt);
}

}  // namespace lpacc
