#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "mcrm/problem.hpp"

namespace mcrm {

enum class GradientMode { exact, central_fd, forward_fd, backward_fd };

enum class HessianMode {
  exact,
  from_gradients_forward,
  from_gradients_backward,
  from_gradients_central,
  from_values_cross,
  from_values_forward,
};

struct DerivativeMode {
  GradientMode gradient = GradientMode::exact;
  HessianMode hessian = HessianMode::exact;

  bool exact() const { return gradient == GradientMode::exact && hessian == HessianMode::exact; }
  bool uses_values_only() const;
  friend bool operator==(const DerivativeMode&, const DerivativeMode&) = default;
};

std::string to_string(GradientMode mode);
std::string to_string(HessianMode mode);
GradientMode parse_gradient_mode(std::string_view text);
HessianMode parse_hessian_mode(std::string_view text);

/// Central-difference gradients with value-based cross Hessians, the
/// derivative-free configuration.
inline DerivativeMode derivative_free_mode() {
  return {GradientMode::central_fd, HessianMode::from_values_cross};
}

/// Step-size rule. A negative `floor` selects the default floor
/// 1e-12 * max(1, ||x||).
struct StepRule {
  double beta = 0.5;
  double alpha = 2.0;
  double floor = -1.0;

  void validate() const;
  double floor_at(const Vector& x) const;
};

enum class StepContext { grad_central, grad_onesided, hess_gradients, hess_values, combined };

/// h for the given context at inner index i, then max(h, floor). Throws
/// DegenerateStep when the displacement and the floor are both zero.
double step_size(const StepRule& rule, double delta_norm, int n, int i, StepContext context,
                 double floor);

/// Same, with the floor taken from the rule (default floor uses ||x|| = 0).
double step_size(const StepRule& rule, double delta_norm, int n, int i, StepContext context);

/// (f(x + h e_i) - f(x - h e_i)) / 2h. 2n evaluations.
Vector fd_gradient_central(const ScalarFn& f, const Vector& x, double h);

enum class Side { forward, backward };

/// One-sided differences. n + 1 evaluations.
Vector fd_gradient_onesided(const ScalarFn& f, const Vector& x, double h, Side side);

enum class GradientStencil { forward, backward, central };

/// Columns of gradient differences, symmetrized. n + 1 gradient evaluations
/// for one-sided stencils, 2n for central.
Matrix fd_hessian_from_gradients(const GradientFn& g, const Vector& x, double h,
                                 GradientStencil variant);

enum class ValueStencil { cross, forward };

/// Four-point value stencils, symmetrized. Shared stencil points are
/// evaluated once per call: 2n^2 + 1 distinct points for `cross`,
/// 1 + n + n(n+1)/2 for `forward`.
Matrix fd_hessian_from_values(const ScalarFn& f, const Vector& x, double h, ValueStencil variant);

/// Per-objective evaluation budget of one bundle.
struct StencilBudget {
  long long values = 0;
  long long gradients = 0;
  long long hessians = 0;
};

StencilBudget gradient_budget(GradientMode mode, int n);
StencilBudget hessian_budget(HessianMode mode, int n);
StencilBudget bundle_budget(const DerivativeMode& mode, int n);

/// Structural error factors of a bundle. Multiply by the relevant Lipschitz
/// constant to obtain the error coefficients of the accuracy contract.
struct KappaFactors {
  double gradient = 0.0;
  double hessian = 0.0;
};

KappaFactors kappa_factors(const DerivativeMode& mode, double beta, int n);

struct DerivativeBundle {
  Vector point;
  std::vector<Vector> gradients;
  std::vector<Matrix> hessians;
  double kappa_G = 0.0;
  double kappa_H = 0.0;
  double h_gradient = 0.0;  // 0 when the gradient mode is exact
  double h_hessian = 0.0;   // 0 when the Hessian mode is exact
  int inner_index = 0;

  /// Smallest nonzero step in use, 0 for exact bundles.
  double h_used() const;
};

/// Derivatives of every objective at x for inner index i. The steps depend
/// on ||x - x_prev||. Central gradients paired with value-based Hessians
/// share the combined step; other pairings use their own context.
DerivativeBundle build_bundle(const ProblemInstance& problem, const DerivativeMode& mode,
                              const StepRule& rule, const Vector& x, const Vector& x_prev, int i,
                              EvalCounter* counter = nullptr);

}  // namespace mcrm
