#pragma once

#include <vector>

#include "mcrm/derivatives.hpp"

namespace mcrm {

/// Nonnegative weights summing to one.
struct SimplexWeights {
  Vector lambda;

  static SimplexWeights uniform(int m);
  static SimplexWeights vertex(int m, int j);

  /// Entries >= 0 and |sum - 1| <= tol.
  bool valid(double tol = 1e-12) const;
};

/// Euclidean projection onto the unit simplex.
Vector project_simplex(const Vector& v);

/// M^j(y) = <g_j, s> + 1/2 <H_j s, s> + (sigma/6) ||s||^3 with s = y - base.
class CubicModel {
 public:
  CubicModel(Vector base, double sigma, std::vector<Vector> gradients,
             std::vector<Matrix> hessians);
  CubicModel(const DerivativeBundle& bundle, double sigma);

  int n() const { return static_cast<int>(base_.size()); }
  int m() const { return static_cast<int>(gradients_.size()); }
  const Vector& base() const { return base_; }
  double sigma() const { return sigma_; }
  const Vector& gradient(int j) const { return gradients_.at(j); }
  const Matrix& hessian(int j) const { return hessians_.at(j); }

  /// Component value at y. j is zero-based.
  double eval_component(int j, const Vector& y) const;
  /// Component gradient g_j + H_j s + (sigma/2) ||s|| s.
  Vector grad_component(int j, const Vector& y) const;

  /// Same quantities in the step variable s = y - base.
  double value_at_step(int j, const Vector& s) const;
  Vector grad_at_step(int j, const Vector& s) const;
  Vector values_at_step(const Vector& s) const;

  struct MaxValue {
    double value;
    std::vector<int> active_set;  // zero-based
  };
  /// max_j M^j(y) with the components within 1e-12 (1 + |value|) of it.
  MaxValue eval_max(const Vector& y) const;

  /// || sum_j lambda_j grad_component(j, y) ||.
  double kkt_residual(const Vector& y, const SimplexWeights& w) const;

 private:
  void check_index(int j) const;

  Vector base_;
  double sigma_;
  std::vector<Vector> gradients_;
  std::vector<Matrix> hessians_;
};

}  // namespace mcrm
