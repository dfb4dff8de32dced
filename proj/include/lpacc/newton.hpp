#pragma once

#include "lpacc/core.hpp"

#include <algorithm>
#include <cmath>

namespace lpacc {

struct LocalModel {
  double value = 0.0;
  Vector grad;
  Matrix hess;
};

struct NewtonOptions {
  int max_iterations = 200;
  /// Stop once the caller's stationarity residual drops below this.
  double tolerance = 1e-12;
};

struct NewtonResult {
  Vector x;
  double value = 0.0;
  double residual = kInf;
  int iterations = 0;
  bool converged = false;
};

/// Damped Newton for smooth convex problems.
///
/// `eval(x)` returns value, gradient and Hessian; `residual(x, grad)` is the
/// scale-aware stationarity measure used for termination. Singular Hessians
/// (flat |v|^p penalties at v = 0 when p > 2) are handled by a Levenberg
/// shift that grows until the direction is a finite descent direction.
template <class Eval, class Residual>
NewtonResult minimize_newton(Eval&& eval, Residual&& residual, Vector x,
                             const NewtonOptions& opt = {}) {
  NewtonResult out;
  LocalModel m = eval(x);
  double res = residual(x, m.grad);
  int it = 0;
  for (; it < opt.max_iterations; ++it) {
    if (res <= opt.tolerance) break;
    const double hscale = std::max(m.hess.cwiseAbs().maxCoeff(), m.grad.cwiseAbs().maxCoeff());
    double shift = 0.0;
    bool moved = false;
    for (int attempt = 0; attempt < 24 && !moved; ++attempt) {
      Matrix h = m.hess;
      if (shift > 0.0) h.diagonal().array() += shift;
      Eigen::LDLT<Matrix> ldlt(h);
      Vector d = ldlt.solve(-m.grad);
      const double slope = m.grad.dot(d);
      if (ldlt.info() != Eigen::Success || !d.allFinite() || !(slope < 0.0)) {
        shift = (shift == 0.0) ? std::max(1e-14 * hscale, 1e-300) : shift * 100.0;
        continue;
      }
      double alpha = 1.0;
      for (int bt = 0; bt < 120; ++bt, alpha *= 0.5) {
        Vector xt = x + alpha * d;
        LocalModel mt = eval(xt);
        if (std::isfinite(mt.value) && mt.value <= m.value + 1e-4 * alpha * slope) {
          x = std::move(xt);
          m = std::move(mt);
          moved = true;
          break;
        }
        if (bt == 0 && std::isfinite(mt.value)) {
          // Near the optimum the decrease is below roundoff; accept a full
          // step that still shrinks the stationarity residual.
          const double rt = residual(xt, mt.grad);
          if (rt < 0.5 * res && mt.value <= m.value + 1e-13 * (std::abs(m.value) + 1.0)) {
            x = std::move(xt);
            m = std::move(mt);
            moved = true;
            break;
          }
        }
      }
      if (!moved) shift = (shift == 0.0) ? std::max(1e-10 * hscale, 1e-300) : shift * 100.0;
    }
    if (!moved) break;
    res = residual(x, m.grad);
  }
  out.x = std::move(x);
  out.value = m.value;
  out.residual = res;
  out.iterations = it;
  out.converged = res <= opt.tolerance;
  return out;
}

}  // namespace lpacc
