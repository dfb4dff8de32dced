#pragma once

// Independent high-accuracy solvers used as test oracles.

#include "lpacc/core.hpp"
#include "lpacc/pnorm.hpp"

#include <boost/math/tools/minima.hpp>

#include <Eigen/Cholesky>

#include <cmath>
#include <cstdint>
#include <utility>

namespace lpacc::reference {

/// Brent minimization of a unimodal scalar function on [lo, hi].
template <class F>
std::pair<double, double> minimize_scalar(F&& f, double lo, double hi) {
  std::uintmax_t it = 500;
  return boost::math::tools::brent_find_minima(f, lo, hi, std::numeric_limits<double>::digits, it);
}

/// Grid search followed by Brent refinement around the best cell.
template <class F>
std::pair<double, double> grid_minimize(F&& f, double lo, double hi, int cells = 2000) {
  double best_x = lo, best_f = f(lo);
  const double h = (hi - lo) / cells;
  for (int i = 1; i <= cells; ++i) {
    const double x = lo + i * h;
    const double v = f(x);
    if (v < best_f) {
      best_f = v;
      best_x = x;
    }
  }
  auto r = minimize_scalar(f, std::max(lo, best_x - h), std::min(hi, best_x + h));
  return r.second <= best_f ? r : std::make_pair(best_x, best_f);
}

struct NewtonRegressionResult {
  Vector x;
  double objective = 0.0;
  int iterations = 0;
  double decrement = kInf;
};

/// Damped Newton with backtracking on ‖Ax - b‖_s^s, run until the Newton
/// decrement stalls at rounding level. The Hessian gets a relative ridge
/// where |Ax - b| vanishes.
inline NewtonRegressionResult damped_newton_regression(const Matrix& A, const Vector& b, double s, Vector x0,
                                                       int max_iterations = 500) {
  NewtonRegressionResult out;
  out.x = std::move(x0);
  auto obj = [&](const Vector& x) { return pnorm_pow(A * x - b, s); };
  double fx = obj(out.x);
  for (int it = 0; it < max_iterations; ++it) {
    const Vector v = A * out.x - b;
    Vector w(v.size());
    for (Index i = 0; i < v.size(); ++i) w[i] = s * (s - 1.0) * std::pow(std::abs(v[i]), s - 2.0);
    const Vector g = A.transpose() * (s * phi(v, s));
    Matrix H = A.transpose() * w.asDiagonal() * A;
    H.diagonal().array() += 1e-15 * H.diagonal().maxCoeff();
    const Vector dx = Eigen::LDLT<Matrix>(H).solve(-g);
    out.decrement = -g.dot(dx);
    out.iterations = it + 1;
    if (!(out.decrement > 1e-28 * std::max(1.0, fx))) break;
    double t = 1.0;
    bool moved = false;
    for (int k = 0; k < 60; ++k, t *= 0.5) {
      const Vector xt = out.x + t * dx;
      const double ft = obj(xt);
      if (ft <= fx + 0.25 * t * g.dot(dx)) {
        out.x = xt;
        fx = ft;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  out.objective = fx;
  return out;
}

}  // namespace lpacc::reference
