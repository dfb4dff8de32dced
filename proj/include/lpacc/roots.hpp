#pragma once

#include "lpacc/core.hpp"

#include <cmath>

namespace lpacc {

struct RootResult {
  double x = kNaN;
  double fx = kNaN;
  int evaluations = 0;
  bool converged = false;
};

/// Root of h over (0, ∞), where h is nondecreasing in x and crosses zero.
///
/// Brackets by geometric expansion from x0 (factor `expand`), then runs
/// Illinois regula falsi on log x. Stops when |h| <= ftol, when the bracket
/// collapses to rounding level, or after `max_eval` evaluations. h may return
/// ±inf; such points only take part in bisection.
template <class F>
RootResult find_root_log(F&& h, double x0, double ftol, int max_eval = 200, double expand = 4.0) {
  RootResult out;
  require(x0 > 0.0 && std::isfinite(x0), "find_root_log: start must be positive");
  auto eval = [&](double u) {
    ++out.evaluations;
    return h(std::exp(u));
  };
  double ua = std::log(x0);
  double fa = eval(ua);
  auto finish = [&](double u, double fu, bool ok) {
    out.x = std::exp(u);
    out.fx = fu;
    out.converged = ok;
    return out;
  };
  if (std::abs(fa) <= ftol) return finish(ua, fa, true);
  if (std::isnan(fa)) return finish(ua, fa, false);

  const double step = std::log(expand);
  double ub = ua, fb = fa;
  double dir = (fa < 0.0) ? step : -step;
  while (out.evaluations < max_eval) {
    ub += dir;
    fb = eval(ub);
    if (std::isnan(fb)) return finish(ua, fa, false);
    if (std::abs(fb) <= ftol) return finish(ub, fb, true);
    if ((fb > 0.0) != (fa > 0.0)) break;
    ua = ub;
    fa = fb;
    if (std::abs(ub) > 700.0) return finish(ua, fa, false);
  }
  if ((fb > 0.0) == (fa > 0.0)) return finish(ua, fa, false);

  // Now h(ua) and h(ub) have opposite signs.
  int side = 0;
  while (out.evaluations < max_eval) {
    double um;
    if (std::isfinite(fa) && std::isfinite(fb)) {
      um = (ua * fb - ub * fa) / (fb - fa);
      const double lo = std::min(ua, ub), hi = std::max(ua, ub);
      if (!(um > lo && um < hi)) um = 0.5 * (ua + ub);
    } else {
      um = 0.5 * (ua + ub);
    }
    if (std::abs(ub - ua) <= 4e-16 * std::max(1.0, std::abs(um))) {
      const bool a_better = std::abs(fa) <= std::abs(fb);
      return finish(a_better ? ua : ub, a_better ? fa : fb, false);
    }
    const double fm = eval(um);
    if (std::isnan(fm)) return finish(um, fm, false);
    if (std::abs(fm) <= ftol) return finish(um, fm, true);
    if ((fm > 0.0) == (fb > 0.0)) {
      ub = um;
      fb = fm;
      if (side == -1) fa *= 0.5;
      side = -1;
    } else {
      ua = um;
      fa = fm;
      if (side == 1) fb *= 0.5;
      side = 1;
    }
  }
  const bool a_better = std::abs(fa) <= std::abs(fb);
  return finish(a_better ? ua : ub, a_better ? fa : fb, false);
}

/// Bisection for a nondecreasing h on the real line. The bracket [lo, hi] is
/// widened geometrically until h(lo) <= 0 <= h(hi); returns the crossing to
/// rounding precision.
template <class F>
double bisect_increasing(F&& h, double lo, double hi) {
  require(lo < hi, "bisect_increasing: empty bracket");
  double width = hi - lo;
  for (int i = 0; i < 2000 && h(lo) > 0.0; ++i) {
    lo -= width;
    width *= 2.0;
  }
  width = hi - lo;
  for (int i = 0; i < 2000 && h(hi) < 0.0; ++i) {
    hi += width;
    width *= 2.0;
  }
  for (int i = 0; i < 400; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (h(mid) < 0.0) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace lpacc
