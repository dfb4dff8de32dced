#pragma once

#include "lpacc/core.hpp"
#include "lpacc/objective.hpp"
#include "lpacc/oracle.hpp"
#include "lpacc/piecewise.hpp"
#include "lpacc/pnorm.hpp"

#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace lpacc {

/// g_k(x) = β_k max_{i<=k} (x_i - i α_k) with β_k, α_k tuned so the
/// constrained s-power prox reveals at most one new coordinate per call.
struct NemirovskiiInstance {
  int k = 1;
  int d = 1;
  double R = 1.0;
  PNormParams params;
  double beta = 0.0;
  double alpha = 0.0;

  std::shared_ptr<const CoordinateMaxObjective> objective() const {
    Vector o(k);
    for (int i = 0; i < k; ++i) o[i] = (i + 1) * alpha;
    return std::make_shared<CoordinateMaxObjective>(d, beta, o);
  }
};

inline NemirovskiiInstance make_nemirovskii(int k, int d, double R, double p, double s, double lambda) {
  require(k >= 1 && d >= k, "make_nemirovskii: need 1 <= k <= d");
  require(R > 0.0 && std::isfinite(R), "make_nemirovskii: R must be positive");
  NemirovskiiInstance inst;
  inst.k = k;
  inst.d = d;
  inst.R = R;
  inst.params = PNormParams::finite(p, s, lambda);
  const double k1 = k + 1.0;
  inst.beta = std::pow((s - 1.0) / s, 2.0 * (s - 1.0)) * s * lambda * std::pow(R, s - 1.0) /
              std::pow(k1, (p + 1.0) * (s - 1.0) / p);
  inst.alpha = (s - 1.0) * R / (s * std::pow(k1, (p + 1.0) / p));
  return inst;
}

/// α_k through β_k: (s/(s-1)) (β_k/(sλ))^{1/(s-1)}.
inline double alpha_from_beta(const NemirovskiiInstance& inst) {
  const double s = inst.params.s;
  return s / (s - 1.0) * std::pow(inst.beta / (s * inst.params.lambda), 1.0 / (s - 1.0));
}

inline double eval_g(const NemirovskiiInstance& inst, const Vector& x) { return inst.objective()->value(x); }

/// β_k e_{i*} with i* the smallest maximizing index.
inline Vector subgradient_g(const NemirovskiiInstance& inst, const Vector& x) {
  return inst.objective()->gradient(x);
}

struct GapFloor {
  /// β_k R/(i+1)^{1/p} - (i+1) β_k α_k, the published per-iterate form. It
  /// bounds g_k(x*) through a witness that ignores pieces beyond i+1, so it
  /// can exceed the true gap for i+1 < k.
  double per_iterate = 0.0;
  /// β_k R/k^{1/p} - (i+1) β_k α_k for i < k (0 at i = k): the same argument
  /// with the witness spread over all k pieces.
  double provable = 0.0;
  /// λ R^s / (16 (k+1)^{s(1+ν)}).
  double terminal = 0.0;
};

inline GapFloor gap_floor(const NemirovskiiInstance& inst, int i) {
  require(i >= 0 && i <= inst.k, "gap_floor: need 0 <= i <= k");
  const double p = inst.params.p, s = inst.params.s;
  GapFloor g;
  g.per_iterate = inst.beta * inst.R / std::pow(i + 1.0, 1.0 / p) - (i + 1.0) * inst.beta * inst.alpha;
  if (i < inst.k)
    g.provable = inst.beta * inst.R / std::pow(static_cast<double>(inst.k), 1.0 / p) - (i + 1.0) * inst.beta * inst.alpha;
  g.terminal = inst.params.lambda * std::pow(inst.R, s) / (16.0 * std::pow(inst.k + 1.0, inst.params.rate_exponent()));
  return g;
}

/// Lower bound on g_k over points supported on the first k' coordinates.
inline double s_floor(const NemirovskiiInstance& inst, int kp) {
  require(kp >= 0 && kp < inst.k, "s_floor: need 0 <= k' < k");
  return -(kp + 1.0) * inst.beta * inst.alpha;
}

/// -β_k R/k'^{1/p}, the value of g_{k'} at the witness y_i = -R/k'^{1/p}
/// (i <= k'). It bounds min g_k over the R-ball only for k' = k: for k' < k
/// the untouched pieces keep g_k >= -(k'+1) β_k α_k.
inline double opt_ceiling(const NemirovskiiInstance& inst, int kp) {
  require(kp >= 1 && kp <= inst.k, "opt_ceiling: need 1 <= k' <= k");
  return -inst.beta * inst.R / std::pow(static_cast<double>(kp), 1.0 / inst.params.p);
}

/// Exact min of g_k over ‖x‖_p <= R restricted to the first `support` coordinates.
inline piecewise::ConstrainedMin constrained_optimum(const NemirovskiiInstance& inst, int support) {
  return piecewise::minimum_on_ball(*inst.objective(), inst.params.p, inst.R, support);
}

inline piecewise::ConstrainedMin constrained_optimum(const NemirovskiiInstance& inst) {
  return constrained_optimum(inst, inst.k);
}

/// g_k(x) = max_{i<=k} (x_i - α i) with α >= 4r, for the (r, p)-ball oracle.
struct BallHardInstance {
  int k = 1;
  int d = 1;
  double R = 1.0;
  double p = 2.0;
  double r = 0.1;
  double alpha = 0.4;

  std::shared_ptr<const CoordinateMaxObjective> objective() const {
    Vector o(k);
    for (int i = 0; i < k; ++i) o[i] = (i + 1) * alpha;
    return std::make_shared<CoordinateMaxObjective>(d, 1.0, o);
  }
};

inline BallHardInstance make_ball_instance(int k, int d, double R, double p, double r) {
  require(k >= 1 && d >= k, "make_ball_instance: need 1 <= k <= d");
  require(R > 0.0 && r > 0.0 && p >= 2.0, "make_ball_instance: need R, r > 0 and p >= 2");
  return BallHardInstance{k, d, R, p, r, 4.0 * r};
}

/// R/(i+1)^{1/p} - α(i+1), the published form.
inline double ball_gap_floor(const BallHardInstance& inst, int i) {
  require(i >= 0 && i <= inst.k, "ball_gap_floor: need 0 <= i <= k");
  return inst.R / std::pow(i + 1.0, 1.0 / inst.p) - inst.alpha * (i + 1.0);
}

/// R/k^{1/p} - α(i+1) for i < k (0 at i = k).
inline double ball_gap_floor_provable(const BallHardInstance& inst, int i) {
  require(i >= 0 && i <= inst.k, "ball_gap_floor_provable: need 0 <= i <= k");
  if (i == inst.k) return 0.0;
  return inst.R / std::pow(static_cast<double>(inst.k), 1.0 / inst.p) - inst.alpha * (i + 1.0);
}

/// The scale R^{1/(p+1)} r^{p/(p+1)} that the ball floor reaches at i ~ (R/r)^{p/(p+1)}.
inline double ball_floor_scale(const BallHardInstance& inst) {
  return std::pow(inst.R, 1.0 / (inst.p + 1.0)) * std::pow(inst.r, inst.p / (inst.p + 1.0));
}

inline piecewise::ConstrainedMin constrained_optimum(const BallHardInstance& inst) {
  return piecewise::minimum_on_ball(*inst.objective(), inst.p, inst.R, inst.k);
}

/// h(x) = max{f(x), ‖x‖_p - R}; ties pick f's subgradient.
class UnconstrainedExtension final : public Objective {
 public:
  UnconstrainedExtension(ObjectivePtr f, double p, double R) : f_(std::move(f)), p_(p), R_(R) {
    require(f_ != nullptr && R > 0.0, "UnconstrainedExtension: need f and R > 0");
  }
  Index dim() const override { return f_->dim(); }
  double value(const Vector& x) const override {
    return std::max(f_->value(x), pnorm(x, p_) - R_);
  }
  Vector gradient(const Vector& x) const override {
    if (f_->value(x) >= pnorm(x, p_) - R_) return f_->gradient(x);
    const double n = pnorm(x, p_);
    return phi(x, p_) / std::pow(n, p_ - 1.0);
  }

 private:
  ObjectivePtr f_;
  double p_;
  double R_;
};

inline std::shared_ptr<const UnconstrainedExtension> make_unconstrained(const NemirovskiiInstance& inst) {
  return std::make_shared<UnconstrainedExtension>(inst.objective(), inst.params.p, inst.R);
}

struct ChainStep {
  std::vector<int> center_support;
  std::vector<int> response_support;
  std::vector<int> new_indices;
  Vector response;
  double objective = 0.0;
};

struct ZeroChainReport {
  std::vector<ChainStep> steps;
  double support_tol = 0.0;
  /// Every response adds at most one index, and it is the next one.
  bool pass = false;
  /// Every response adds exactly one index.
  bool exact = false;
  std::string message;
};

inline std::vector<int> support_of(const Vector& x, double tol) {
  std::vector<int> s;
  for (Index j = 0; j < x.size(); ++j)
    if (std::abs(x[j]) > tol) s.push_back(static_cast<int>(j));
  return s;
}

/// Runs x^{(0)} = 0, x^{(i+1)} = oracle(x^{(i)}) and checks that each
/// response's support is a prefix that grows by at most one coordinate.
inline ZeroChainReport verify_zero_chain(const Objective& f, const std::function<Vector(const Vector&)>& oracle,
                                         int T, double support_tol) {
  ZeroChainReport rep;
  rep.support_tol = support_tol;
  rep.pass = true;
  rep.exact = true;
  Vector x = Vector::Zero(f.dim());
  for (int i = 0; i < T; ++i) {
    ChainStep st;
    st.center_support = support_of(x, support_tol);
    try {
      st.response = oracle(x);
    } catch (const OracleFailure& e) {
      rep.pass = false;
      rep.message = std::string("oracle failure at step ") + std::to_string(i) + ": " + e.what();
      return rep;
    }
    st.response_support = support_of(st.response, support_tol);
    for (int j : st.response_support) {
      bool seen = false;
      for (int c : st.center_support) seen = seen || c == j;
      if (!seen) st.new_indices.push_back(j);
    }
    st.objective = f.value(st.response);
    const int prev = static_cast<int>(st.center_support.size());
    bool prefix = true;
    for (size_t j = 0; j < st.response_support.size(); ++j) prefix = prefix && st.response_support[j] == int(j);
    const int grown = static_cast<int>(st.response_support.size()) - prev;
    const bool ok = prefix && grown <= 1 && st.new_indices.size() <= 1;
    if (!ok && rep.pass) {
      rep.pass = false;
      rep.message = "query " + std::to_string(i + 1) + " revealed more than the next coordinate";
    }
    if (st.new_indices.size() != 1 && rep.exact) {
      rep.exact = false;
      if (rep.pass) rep.message = "query " + std::to_string(i + 1) + " revealed no new coordinate";
    }
    x = st.response;
    rep.steps.push_back(std::move(st));
  }
  return rep;
}

/// Chain through the constrained s-power prox of a Nemirovskii instance.
inline ZeroChainReport verify_zero_chain(const NemirovskiiInstance& inst, int T, double support_tol) {
  const auto f = inst.objective();
  const ProxQuery base{Vector::Zero(inst.d), inst.params, inst.R, 1e-9 * inst.beta * inst.R};
  auto oracle = [&](const Vector& c) {
    ProxQuery q = base;
    q.center = c;
    return solve_prox(*f, q).x;
  };
  return verify_zero_chain(*f, oracle, T, support_tol);
}

/// Chain through the (r, p)-ball oracle of a ball instance.
inline ZeroChainReport verify_zero_chain(const BallHardInstance& inst, int T, double support_tol) {
  const auto f = inst.objective();
  auto oracle = [&](const Vector& c) { return solve_ball(*f, c, inst.r, inst.p, 1e-12, inst.R).x; };
  return verify_zero_chain(*f, oracle, T, support_tol);
}

}  // namespace lpacc
