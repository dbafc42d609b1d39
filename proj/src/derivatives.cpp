#include "mcrm/derivatives.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mcrm {

namespace {

double checked(const ScalarFn& f, const Vector& point) {
  const double value = f(point);
  if (!std::isfinite(value)) throw EvaluationFailure(-1, point, "non-finite value at stencil point");
  return value;
}

Vector checked(const GradientFn& g, const Vector& point) {
  Vector value = g(point);
  if (value.size() != point.size() || !value.allFinite())
    throw EvaluationFailure(-1, point, "non-finite gradient at stencil point");
  return value;
}

void require_positive_step(double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw InvalidInput("finite-difference step must be positive");
}

bool is_values_hessian(HessianMode mode) {
  return mode == HessianMode::from_values_cross || mode == HessianMode::from_values_forward;
}

bool is_gradients_hessian(HessianMode mode) {
  return mode == HessianMode::from_gradients_forward ||
         mode == HessianMode::from_gradients_backward ||
         mode == HessianMode::from_gradients_central;
}

}  // namespace

bool DerivativeMode::uses_values_only() const {
  return gradient != GradientMode::exact && is_values_hessian(hessian);
}

std::string to_string(GradientMode mode) {
  switch (mode) {
    case GradientMode::exact: return "exact";
    case GradientMode::central_fd: return "central_fd";
    case GradientMode::forward_fd: return "forward_fd";
    case GradientMode::backward_fd: return "backward_fd";
  }
  return "?";
}

std::string to_string(HessianMode mode) {
  switch (mode) {
    case HessianMode::exact: return "exact";
    case HessianMode::from_gradients_forward: return "from_gradients_forward";
    case HessianMode::from_gradients_backward: return "from_gradients_backward";
    case HessianMode::from_gradients_central: return "from_gradients_central";
    case HessianMode::from_values_cross: return "from_values_cross";
    case HessianMode::from_values_forward: return "from_values_forward";
  }
  return "?";
}

GradientMode parse_gradient_mode(std::string_view text) {
  for (auto mode : {GradientMode::exact, GradientMode::central_fd, GradientMode::forward_fd,
                    GradientMode::backward_fd}) {
    if (text == to_string(mode)) return mode;
  }
  throw InvalidInput("unknown gradient_mode '" + std::string(text) +
                     "' (exact, central_fd, forward_fd, backward_fd)");
}

HessianMode parse_hessian_mode(std::string_view text) {
  for (auto mode : {HessianMode::exact, HessianMode::from_gradients_forward,
                    HessianMode::from_gradients_backward, HessianMode::from_gradients_central,
                    HessianMode::from_values_cross, HessianMode::from_values_forward}) {
    if (text == to_string(mode)) return mode;
  }
  throw InvalidInput("unknown hessian_mode '" + std::string(text) +
                     "' (exact, from_gradients_{forward,backward,central}, "
                     "from_values_{cross,forward})");
}

void StepRule::validate() const {
  if (!(beta >= 0.0)) throw InvalidInput("beta must be nonnegative");
  if (!(alpha > 1.0)) throw InvalidInput("alpha must exceed 1");
}

double StepRule::floor_at(const Vector& x) const {
  if (floor >= 0.0) return floor;
  return 1e-12 * std::max(1.0, x.norm());
}

double step_size(const StepRule& rule, double delta_norm, int n, int i, StepContext context,
                 double floor) {
  if (!(delta_norm >= 0.0)) throw InvalidInput("step_size: displacement must be nonnegative");
  if (n <= 0 || i < 0) throw InvalidInput("step_size: need n > 0 and i >= 0");
  if (delta_norm == 0.0 && floor <= 0.0)
    throw DegenerateStep("zero displacement and zero floor give a zero finite-difference step");

  const double scale = std::pow(static_cast<double>(n), rule.beta) * std::pow(rule.alpha, i - 1);
  const double central = std::sqrt(6.0) / std::sqrt(scale);
  const double values = 1.5 / scale;
  double h = 0.0;
  switch (context) {
    case StepContext::grad_central: h = central * delta_norm; break;
    case StepContext::grad_onesided: h = 2.0 * delta_norm * delta_norm / scale; break;
    case StepContext::hess_gradients: h = 2.0 * delta_norm / scale; break;
    case StepContext::hess_values: h = values * delta_norm; break;
    case StepContext::combined: h = std::min(central, values) * delta_norm; break;
  }
  return std::max(h, floor);
}

double step_size(const StepRule& rule, double delta_norm, int n, int i, StepContext context) {
  return step_size(rule, delta_norm, n, i, context, rule.floor >= 0.0 ? rule.floor : 1e-12);
}

Vector fd_gradient_central(const ScalarFn& f, const Vector& x, double h) {
  require_positive_step(h);
  const auto n = x.size();
  Vector grad(n);
  Vector probe = x;
  for (Eigen::Index i = 0; i < n; ++i) {
    probe[i] = x[i] + h;
    const double up = checked(f, probe);
    probe[i] = x[i] - h;
    const double down = checked(f, probe);
    probe[i] = x[i];
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

Vector fd_gradient_onesided(const ScalarFn& f, const Vector& x, double h, Side side) {
  require_positive_step(h);
  const auto n = x.size();
  const double base = checked(f, x);
  Vector grad(n);
  Vector probe = x;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (side == Side::forward) {
      probe[i] = x[i] + h;
      grad[i] = (checked(f, probe) - base) / h;
    } else {
      probe[i] = x[i] - h;
      grad[i] = (base - checked(f, probe)) / h;
    }
    probe[i] = x[i];
  }
  return grad;
}

Matrix fd_hessian_from_gradients(const GradientFn& g, const Vector& x, double h,
                                 GradientStencil variant) {
  require_positive_step(h);
  const auto n = x.size();
  Matrix a(n, n);
  Vector probe = x;
  Vector base;
  if (variant != GradientStencil::central) base = checked(g, x);
  for (Eigen::Index i = 0; i < n; ++i) {
    switch (variant) {
      case GradientStencil::forward:
        probe[i] = x[i] + h;
        a.col(i) = (checked(g, probe) - base) / h;
        break;
      case GradientStencil::backward:
        probe[i] = x[i] - h;
        a.col(i) = (base - checked(g, probe)) / h;
        break;
      case GradientStencil::central: {
        probe[i] = x[i] + h;
        const Vector up = checked(g, probe);
        probe[i] = x[i] - h;
        a.col(i) = (up - checked(g, probe)) / (2.0 * h);
        break;
      }
    }
    probe[i] = x[i];
  }
  return 0.5 * (a + a.transpose());
}

Matrix fd_hessian_from_values(const ScalarFn& f, const Vector& x, double h, ValueStencil variant) {
  require_positive_step(h);
  const auto n = x.size();
  Matrix a(n, n);
  Vector probe = x;
  const double f0 = checked(f, x);

  // Every (i, l) and (l, i) entry uses the same stencil points, so each
  // distinct point is evaluated once and the result is symmetric as built.
  if (variant == ValueStencil::cross) {
    const double denom = 4.0 * h * h;
    for (Eigen::Index i = 0; i < n; ++i) {
      probe[i] = x[i] + 2.0 * h;
      const double up = checked(f, probe);
      probe[i] = x[i] - 2.0 * h;
      const double down = checked(f, probe);
      probe[i] = x[i];
      a(i, i) = (up - 2.0 * f0 + down) / denom;
      for (Eigen::Index l = i + 1; l < n; ++l) {
        probe[i] = x[i] + h;
        probe[l] = x[l] + h;
        const double pp = checked(f, probe);
        probe[l] = x[l] - h;
        const double pm = checked(f, probe);
        probe[i] = x[i] - h;
        const double mm = checked(f, probe);
        probe[l] = x[l] + h;
        const double mp = checked(f, probe);
        probe[i] = x[i];
        probe[l] = x[l];
        a(i, l) = a(l, i) = (pp - pm - mp + mm) / denom;
      }
    }
  } else {
    const double denom = h * h;
    Vector single(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      probe[i] = x[i] + h;
      single[i] = checked(f, probe);
      probe[i] = x[i];
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index l = i; l < n; ++l) {
        probe[i] += h;
        probe[l] += h;
        const double both = checked(f, probe);
        probe[i] = x[i];
        probe[l] = x[l];
        a(i, l) = a(l, i) = (both - single[i] - single[l] + f0) / denom;
      }
    }
  }
  return a;
}

StencilBudget gradient_budget(GradientMode mode, int n) {
  switch (mode) {
    case GradientMode::exact: return {0, 1, 0};
    case GradientMode::central_fd: return {2LL * n, 0, 0};
    case GradientMode::forward_fd:
    case GradientMode::backward_fd: return {n + 1LL, 0, 0};
  }
  return {};
}

StencilBudget hessian_budget(HessianMode mode, int n) {
  const long long nn = n;
  switch (mode) {
    case HessianMode::exact: return {0, 0, 1};
    case HessianMode::from_gradients_forward:
    case HessianMode::from_gradients_backward: return {0, nn + 1, 0};
    case HessianMode::from_gradients_central: return {0, 2 * nn, 0};
    case HessianMode::from_values_cross: return {2 * nn * nn + 1, 0, 0};
    case HessianMode::from_values_forward: return {1 + nn + nn * (nn + 1) / 2, 0, 0};
  }
  return {};
}

StencilBudget bundle_budget(const DerivativeMode& mode, int n) {
  const auto g = gradient_budget(mode.gradient, n);
  const auto h = hessian_budget(mode.hessian, n);
  return {g.values + h.values, g.gradients + h.gradients, g.hessians + h.hessians};
}

KappaFactors kappa_factors(const DerivativeMode& mode, double beta, int n) {
  const double nn = n;
  KappaFactors k;
  if (mode.gradient != GradientMode::exact) k.gradient = std::pow(nn, (1.0 - 2.0 * beta) / 2.0);
  if (is_gradients_hessian(mode.hessian)) k.hessian = std::pow(nn, (1.0 - 2.0 * beta) / 2.0);
  if (is_values_hessian(mode.hessian)) k.hessian = std::pow(nn, 1.0 - beta);
  return k;
}

double DerivativeBundle::h_used() const {
  if (h_gradient > 0.0 && h_hessian > 0.0) return std::min(h_gradient, h_hessian);
  return std::max(h_gradient, h_hessian);
}

DerivativeBundle build_bundle(const ProblemInstance& problem, const DerivativeMode& mode,
                              const StepRule& rule, const Vector& x, const Vector& x_prev, int i,
                              EvalCounter* counter) {
  rule.validate();
  if (x.size() != problem.n || x_prev.size() != problem.n)
    throw InvalidInput("build_bundle: point dimension mismatch");
  if (mode.gradient == GradientMode::exact && !problem.has_gradients())
    throw ConfigurationError(problem.name + ": exact gradients requested but none provided");
  if ((mode.hessian == HessianMode::exact) && !problem.has_hessians())
    throw ConfigurationError(problem.name + ": exact Hessians requested but none provided");
  if (is_gradients_hessian(mode.hessian) && !problem.has_gradients())
    throw ConfigurationError(problem.name +
                             ": gradient-based Hessians need analytic gradients");

  const int n = problem.n;
  const double delta = (x - x_prev).norm();
  const double floor = rule.floor_at(x);
  const bool shared = mode.gradient == GradientMode::central_fd && is_values_hessian(mode.hessian);

  DerivativeBundle bundle;
  bundle.point = x;
  bundle.inner_index = i;
  const auto kappa = kappa_factors(mode, rule.beta, n);
  bundle.kappa_G = kappa.gradient;
  bundle.kappa_H = kappa.hessian;

  switch (mode.gradient) {
    case GradientMode::exact: break;
    case GradientMode::central_fd:
      bundle.h_gradient = step_size(rule, delta, n, i,
                                    shared ? StepContext::combined : StepContext::grad_central,
                                    floor);
      break;
    case GradientMode::forward_fd:
    case GradientMode::backward_fd:
      bundle.h_gradient = step_size(rule, delta, n, i, StepContext::grad_onesided, floor);
      break;
  }
  if (is_gradients_hessian(mode.hessian)) {
    bundle.h_hessian = step_size(rule, delta, n, i, StepContext::hess_gradients, floor);
  } else if (is_values_hessian(mode.hessian)) {
    bundle.h_hessian = shared ? bundle.h_gradient
                              : step_size(rule, delta, n, i, StepContext::hess_values, floor);
  }

  for (int j = 0; j < problem.m; ++j) {
    const ScalarFn f = [&problem, j, counter](const Vector& y) {
      return evaluate_objective(problem, j, y, counter);
    };
    const GradientFn g = [&problem, j, counter](const Vector& y) {
      return evaluate_gradient(problem, j, y, counter);
    };

    switch (mode.gradient) {
      case GradientMode::exact: bundle.gradients.push_back(g(x)); break;
      case GradientMode::central_fd:
        bundle.gradients.push_back(fd_gradient_central(f, x, bundle.h_gradient));
        break;
      case GradientMode::forward_fd:
        bundle.gradients.push_back(fd_gradient_onesided(f, x, bundle.h_gradient, Side::forward));
        break;
      case GradientMode::backward_fd:
        bundle.gradients.push_back(fd_gradient_onesided(f, x, bundle.h_gradient, Side::backward));
        break;
    }

    const double hh = bundle.h_hessian;
    switch (mode.hessian) {
      case HessianMode::exact:
        bundle.hessians.push_back(evaluate_hessian(problem, j, x, counter));
        break;
      case HessianMode::from_gradients_forward:
        bundle.hessians.push_back(fd_hessian_from_gradients(g, x, hh, GradientStencil::forward));
        break;
      case HessianMode::from_gradients_backward:
        bundle.hessians.push_back(fd_hessian_from_gradients(g, x, hh, GradientStencil::backward));
        break;
      case HessianMode::from_gradients_central:
        bundle.hessians.push_back(fd_hessian_from_gradients(g, x, hh, GradientStencil::central));
        break;
      case HessianMode::from_values_cross:
        bundle.hessians.push_back(fd_hessian_from_values(f, x, hh, ValueStencil::cross));
        break;
      case HessianMode::from_values_forward:
        bundle.hessians.push_back(fd_hessian_from_values(f, x, hh, ValueStencil::forward));
        break;
    }
  }
  return bundle;
}

}  // namespace mcrm
