#pragma once

#include "lpacc/core.hpp"
#include "lpacc/pnorm.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

namespace lpacc {

enum class SmoothnessTag { smooth, piecewise_linear_max, composite_regression };

/// Convex objective queried by the oracles.
///
/// `taylor_*` refer to the order-k expansion f_k(y, x) of f around x,
/// evaluated at y; objectives that cannot provide it report order 0.
class Objective {
 public:
  virtual ~Objective() = default;

  virtual Index dim() const = 0;
  virtual double value(const Vector& x) const = 0;
  /// Gradient, or some subgradient when f is nonsmooth.
  virtual Vector gradient(const Vector& x) const = 0;

  virtual bool has_hessian() const { return false; }
  virtual Matrix hessian(const Vector&) const { throw DomainError("objective has no Hessian"); }

  virtual int taylor_order() const { return 0; }
  virtual double taylor_value(const Vector&, const Vector&, int) const { no_taylor(); return 0; }
  virtual Vector taylor_grad(const Vector&, const Vector&, int) const { no_taylor(); return {}; }
  virtual Matrix taylor_hessian(const Vector&, const Vector&, int) const { no_taylor(); return {}; }

  virtual SmoothnessTag tag() const { return SmoothnessTag::smooth; }

 protected:
  static void no_taylor() { throw DomainError("objective has no Taylor expansion"); }
  void check(const Vector& x) const {
    if (x.size() != dim()) throw DomainError("objective: dimension mismatch");
  }
};

using ObjectivePtr = std::shared_ptr<const Objective>;

/// gᵀx + c0.
class LinearObjective final : public Objective {
 public:
  explicit LinearObjective(Vector g, double c0 = 0.0) : g_(std::move(g)), c0_(c0) {
    require_finite(g_, "LinearObjective");
  }
  Index dim() const override { return g_.size(); }
  double value(const Vector& x) const override { check(x); return g_.dot(x) + c0_; }
  Vector gradient(const Vector& x) const override { check(x); return g_; }
  bool has_hessian() const override { return true; }
  Matrix hessian(const Vector&) const override { return Matrix::Zero(dim(), dim()); }
  int taylor_order() const override { return 1 << 20; }
  double taylor_value(const Vector& y, const Vector&, int) const override { return value(y); }
  Vector taylor_grad(const Vector&, const Vector&, int) const override { return g_; }
  Matrix taylor_hessian(const Vector& y, const Vector&, int) const override { return hessian(y); }

 private:
  Vector g_;
  double c0_;
};

/// ½ xᵀQx + bᵀx + c0 with Q symmetric positive semidefinite.
class QuadraticObjective final : public Objective {
 public:
  QuadraticObjective(Matrix q, Vector b, double c0 = 0.0) : q_(std::move(q)), b_(std::move(b)), c0_(c0) {
    require(q_.rows() == q_.cols() && q_.rows() == b_.size(), "QuadraticObjective: shape mismatch");
    require(q_.allFinite() && b_.allFinite(), "QuadraticObjective: non-finite entry");
    q_ = 0.5 * (q_ + q_.transpose()).eval();
  }
  Index dim() const override { return b_.size(); }
  double value(const Vector& x) const override { check(x); return 0.5 * x.dot(q_ * x) + b_.dot(x) + c0_; }
  Vector gradient(const Vector& x) const override { check(x); return q_ * x + b_; }
  bool has_hessian() const override { return true; }
  Matrix hessian(const Vector&) const override { return q_; }
  int taylor_order() const override { return 1 << 20; }
  double taylor_value(const Vector& y, const Vector& x, int order) const override {
    if (order >= 2) return value(y);
    const double base = value(x);
    return order == 0 ? base : base + gradient(x).dot(y - x);
  }
  Vector taylor_grad(const Vector& y, const Vector& x, int order) const override {
    if (order >= 2) return gradient(y);
    return order == 0 ? Vector::Zero(dim()) : gradient(x);
  }
  Matrix taylor_hessian(const Vector&, const Vector&, int order) const override {
    return order >= 2 ? q_ : Matrix::Zero(dim(), dim());
  }

 private:
  Matrix q_;
  Vector b_;
  double c0_;
};

/// Σ_i w_i |x_i - a_i|^q with q >= 2. Taylor expansions are available when
/// q is an even integer (the summands are then polynomials).
class SeparablePowerObjective final : public Objective {
 public:
  SeparablePowerObjective(Vector weights, Vector shifts, double q)
      : w_(std::move(weights)), a_(std::move(shifts)), q_(q) {
    require(w_.size() == a_.size(), "SeparablePowerObjective: shape mismatch");
    require(q_ >= 2.0 && std::isfinite(q_), "SeparablePowerObjective: exponent must be >= 2");
    require((w_.array() >= 0.0).all() && w_.allFinite() && a_.allFinite(),
            "SeparablePowerObjective: weights must be finite and nonnegative");
  }

  Index dim() const override { return w_.size(); }

  double value(const Vector& x) const override {
    check(x);
    double acc = 0.0;
    for (Index i = 0; i < dim(); ++i) acc += w_[i] * std::pow(std::abs(x[i] - a_[i]), q_);
    return acc;
  }
  Vector gradient(const Vector& x) const override {
    check(x);
    Vector g(dim());
    for (Index i = 0; i < dim(); ++i) g[i] = w_[i] * q_ * signed_pow(x[i] - a_[i], q_);
    return g;
  }
  bool has_hessian() const override { return true; }
  Matrix hessian(const Vector& x) const override {
    check(x);
    Vector h(dim());
    for (Index i = 0; i < dim(); ++i) h[i] = w_[i] * q_ * (q_ - 1.0) * std::pow(std::abs(x[i] - a_[i]), q_ - 2.0);
    return h.asDiagonal();
  }

  int taylor_order() const override { return polynomial() ? 1 << 20 : 0; }

  double taylor_value(const Vector& y, const Vector& x, int order) const override {
    return taylor_eval(y, x, order, 0).sum();
  }
  Vector taylor_grad(const Vector& y, const Vector& x, int order) const override {
    return taylor_eval(y, x, order, 1);
  }
  Matrix taylor_hessian(const Vector& y, const Vector& x, int order) const override {
    return taylor_eval(y, x, order, 2).asDiagonal();
  }

 private:
  bool polynomial() const {
    return q_ == std::floor(q_) && static_cast<long>(q_) % 2 == 0;
  }

  // deriv-th derivative in y of each summand's order-k expansion around x.
  Vector taylor_eval(const Vector& y, const Vector& x, int order, int deriv) const {
    if (!polynomial()) no_taylor();
    check(x);
    check(y);
    const int m = static_cast<int>(q_);
    const int k = std::min(order, m);
    Vector out = Vector::Zero(dim());
    for (Index i = 0; i < dim(); ++i) {
      const double u = x[i] - a_[i];
      const double d = y[i] - x[i];
      double binom = 1.0;  // C(m, j)
      double acc = 0.0;
      for (int j = 0; j <= k; ++j) {
        if (j > 0) binom *= static_cast<double>(m - j + 1) / j;
        if (j < deriv) continue;
        double falling = 1.0;  // j (j-1) ... (j-deriv+1)
        for (int r = 0; r < deriv; ++r) falling *= (j - r);
        acc += binom * falling * std::pow(u, m - j) * std::pow(d, j - deriv);
      }
      out[i] = w_[i] * acc;
    }
    return out;
  }

  Vector w_;
  Vector a_;
  double q_;
};

/// Sum of objectives sharing a dimension.
class SumObjective final : public Objective {
 public:
  explicit SumObjective(std::vector<ObjectivePtr> parts) : parts_(std::move(parts)) {
    require(!parts_.empty(), "SumObjective: no parts");
    for (const auto& p : parts_) require(p && p->dim() == parts_.front()->dim(), "SumObjective: dimension mismatch");
  }
  Index dim() const override { return parts_.front()->dim(); }
  double value(const Vector& x) const override {
    double acc = 0.0;
    for (const auto& p : parts_) acc += p->value(x);
    return acc;
  }
  Vector gradient(const Vector& x) const override {
    Vector g = Vector::Zero(dim());
    for (const auto& p : parts_) g += p->gradient(x);
    return g;
  }
  bool has_hessian() const override {
    return std::all_of(parts_.begin(), parts_.end(), [](const ObjectivePtr& p) { return p->has_hessian(); });
  }
  Matrix hessian(const Vector& x) const override {
    Matrix h = Matrix::Zero(dim(), dim());
    for (const auto& p : parts_) h += p->hessian(x);
    return h;
  }
  int taylor_order() const override {
    int k = 1 << 20;
    for (const auto& p : parts_) k = std::min(k, p->taylor_order());
    return k;
  }
  double taylor_value(const Vector& y, const Vector& x, int order) const override {
    double acc = 0.0;
    for (const auto& p : parts_) acc += p->taylor_value(y, x, order);
    return acc;
  }
  Vector taylor_grad(const Vector& y, const Vector& x, int order) const override {
    Vector g = Vector::Zero(dim());
    for (const auto& p : parts_) g += p->taylor_grad(y, x, order);
    return g;
  }
  Matrix taylor_hessian(const Vector& y, const Vector& x, int order) const override {
    Matrix h = Matrix::Zero(dim(), dim());
    for (const auto& p : parts_) h += p->taylor_hessian(y, x, order);
    return h;
  }
  SmoothnessTag tag() const override {
    for (const auto& p : parts_)
      if (p->tag() != SmoothnessTag::smooth) return p->tag();
    return SmoothnessTag::smooth;
  }

 private:
  std::vector<ObjectivePtr> parts_;
};

/// max_j (a_jᵀx + b_j) over the rows of `rows`.
class MaxAffineObjective : public Objective {
 public:
  MaxAffineObjective(Matrix rows, Vector offsets) : rows_(std::move(rows)), offsets_(std::move(offsets)) {
    require(rows_.rows() == offsets_.size() && rows_.rows() > 0, "MaxAffineObjective: shape mismatch");
    require(rows_.allFinite() && offsets_.allFinite(), "MaxAffineObjective: non-finite entry");
  }
  Index dim() const override { return rows_.cols(); }
  double value(const Vector& x) const override { check(x); return (rows_ * x + offsets_).maxCoeff(); }
  /// Row of the first maximizing piece.
  Vector gradient(const Vector& x) const override {
    check(x);
    Index j = 0;
    (rows_ * x + offsets_).maxCoeff(&j);
    return rows_.row(j).transpose();
  }
  SmoothnessTag tag() const override { return SmoothnessTag::piecewise_linear_max; }

  const Matrix& rows() const { return rows_; }
  const Vector& offsets() const { return offsets_; }

 protected:
  Matrix rows_;
  Vector offsets_;
};

/// β max_{j < k} (x_j - o_j): pieces that each read a single coordinate.
/// The oracles exploit this form through an exact epigraph reduction.
class CoordinateMaxObjective : public MaxAffineObjective {
 public:
  CoordinateMaxObjective(Index dim, double beta, Vector thresholds)
      : MaxAffineObjective(build_rows(dim, beta, thresholds), -beta * thresholds),
        beta_(beta), thresholds_(std::move(thresholds)) {
    require(beta_ > 0.0, "CoordinateMaxObjective: beta must be positive");
  }

  double beta() const { return beta_; }
  /// o_j for the first k coordinates.
  const Vector& thresholds() const { return thresholds_; }
  Index pieces() const { return thresholds_.size(); }

  double value(const Vector& x) const override {
    check(x);
    return beta_ * (x.head(pieces()) - thresholds_).maxCoeff();
  }

 private:
  static Matrix build_rows(Index dim, double beta, const Vector& thr) {
    require(thr.size() >= 1 && thr.size() <= dim, "CoordinateMaxObjective: need 1 <= k <= d");
    Matrix rows = Matrix::Zero(thr.size(), dim);
    for (Index j = 0; j < thr.size(); ++j) rows(j, j) = beta;
    return rows;
  }

  double beta_;
  Vector thresholds_;
};

}  // namespace lpacc
