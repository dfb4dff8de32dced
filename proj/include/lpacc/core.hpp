#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

namespace lpacc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Raised for malformed arguments: non-finite entries, dimension mismatch,
/// parameters outside their admissible range.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An inner solver could not reach its tolerance. Carries the best iterate
/// found so callers can report or continue from it.
class OracleFailure : public std::runtime_error {
 public:
  OracleFailure(const std::string& what, Vector best, double residual)
      : std::runtime_error(what), best_(std::move(best)), residual_(residual) {}
  const Vector& best() const { return best_; }
  double residual() const { return residual_; }

 private:
  Vector best_;
  double residual_;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw DomainError(msg);
}

inline void require_finite(const Vector& v, const char* what) {
  if (!v.allFinite()) throw DomainError(std::string(what) + ": non-finite entry");
}

inline void require_same_dim(const Vector& a, const Vector& b, const char* what) {
  if (a.size() != b.size()) throw DomainError(std::string(what) + ": dimension mismatch");
}

/// Geometry and regularization exponents shared by every solver.
///
/// `s` may be infinite, in which case `radius` replaces `lambda` and the
/// oracle is a ball oracle.
struct PNormParams {
  double p = 2.0;
  double s = 4.0;
  double lambda = 1.0;
  double radius = kNaN;

  static PNormParams finite(double p, double s, double lambda) {
    require(p >= 2.0 && std::isfinite(p), "p must be finite and >= 2");
    require(s > p && std::isfinite(s), "s must be finite and > p");
    require(lambda > 0.0 && std::isfinite(lambda), "lambda must be positive");
    return PNormParams{p, s, lambda, kNaN};
  }

  static PNormParams ball(double p, double radius) {
    require(p >= 2.0 && std::isfinite(p), "p must be finite and >= 2");
    require(radius > 0.0 && std::isfinite(radius), "radius must be positive");
    return PNormParams{p, kInf, kNaN, radius};
  }

  /// The classical s = p prox; only the line search and tests use it.
  static PNormParams matched(double p, double lambda) {
    require(p >= 2.0 && std::isfinite(p), "p must be finite and >= 2");
    require(lambda > 0.0 && std::isfinite(lambda), "lambda must be positive");
    return PNormParams{p, p, lambda, kNaN};
  }

  bool is_ball() const { return std::isinf(s); }

  /// 1/p - 1/s; equals 1/p for the ball oracle.
  double nu() const { return 1.0 / p - (is_ball() ? 0.0 : 1.0 / s); }

  /// Exponent of T in the accelerated rate, s(1 + nu) = (sp + s - p) / p.
  double rate_exponent() const {
    return is_ball() ? (p + 1.0) / p : (s * p + s - p) / p;
  }
};

}  // namespace lpacc
