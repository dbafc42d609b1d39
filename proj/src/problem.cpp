#include "mcrm/problem.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mcrm {

void ProblemInstance::validate() const {
  if (n <= 0 || m <= 0) throw InvalidInput(name + ": n and m must be positive");
  if (static_cast<int>(objectives.size()) != m)
    throw InvalidInput(name + ": expected " + std::to_string(m) + " objectives");
  if (has_gradients() && static_cast<int>(gradients.size()) != m)
    throw InvalidInput(name + ": gradient count does not match m");
  if (has_hessians() && static_cast<int>(hessians.size()) != m)
    throw InvalidInput(name + ": Hessian count does not match m");
  if (lower.size() != n || upper.size() != n) throw InvalidInput(name + ": box has wrong dimension");
  if (!(lower.array() < upper.array()).all())
    throw InvalidInput(name + ": lower must be strictly below upper");
}

namespace {

void check_dimension(const ProblemInstance& problem, const Vector& x) {
  if (x.size() != problem.n) {
    throw InvalidInput(problem.name + ": point has dimension " + std::to_string(x.size()) +
                       ", expected " + std::to_string(problem.n));
  }
}

void check_index(const ProblemInstance& problem, int j) {
  if (j < 0 || j >= problem.m) throw InvalidInput(problem.name + ": objective index out of range");
}

}  // namespace

double evaluate_objective(const ProblemInstance& problem, int j, const Vector& x,
                          EvalCounter* counter) {
  check_index(problem, j);
  check_dimension(problem, x);
  const double value = problem.objectives[j](x);
  if (counter) ++counter->f;
  if (!std::isfinite(value)) {
    throw EvaluationFailure(j, x,
                            problem.name + ": objective " + std::to_string(j + 1) + " is not finite");
  }
  return value;
}

Vector evaluate(const ProblemInstance& problem, const Vector& x, EvalCounter* counter) {
  check_dimension(problem, x);
  Vector values(problem.m);
  for (int j = 0; j < problem.m; ++j) values[j] = evaluate_objective(problem, j, x, counter);
  return values;
}

Vector evaluate_gradient(const ProblemInstance& problem, int j, const Vector& x,
                         EvalCounter* counter) {
  check_index(problem, j);
  check_dimension(problem, x);
  if (!problem.has_gradients())
    throw ConfigurationError(problem.name + " has no analytic gradients");
  Vector g = problem.gradients[j](x);
  if (counter) ++counter->g;
  if (g.size() != problem.n || !g.allFinite()) {
    throw EvaluationFailure(j, x,
                            problem.name + ": gradient " + std::to_string(j + 1) + " is not finite");
  }
  return g;
}

Matrix evaluate_hessian(const ProblemInstance& problem, int j, const Vector& x,
                        EvalCounter* counter) {
  check_index(problem, j);
  check_dimension(problem, x);
  if (!problem.has_hessians()) throw ConfigurationError(problem.name + " has no analytic Hessians");
  Matrix h = problem.hessians[j](x);
  if (counter) ++counter->h;
  if (h.rows() != problem.n || h.cols() != problem.n || !h.allFinite()) {
    throw EvaluationFailure(j, x,
                            problem.name + ": Hessian " + std::to_string(j + 1) + " is not finite");
  }
  // exact symmetry downstream
  return 0.5 * (h + h.transpose());
}

Vector make_start(const ProblemInstance& problem, double eta) {
  if (!(eta > 0.0 && eta < 1.0)) throw InvalidInput("eta must lie in (0, 1)");
  return (1.0 - eta) * problem.lower + eta * problem.upper;
}

Vector make_start(const ProblemInstance& problem, const Vector& eta) {
  if (eta.size() != problem.n) throw InvalidInput("eta has wrong dimension");
  if (!((eta.array() > 0.0).all() && (eta.array() < 1.0).all()))
    throw InvalidInput("every eta component must lie in (0, 1)");
  return ((1.0 - eta.array()) * problem.lower.array() + eta.array() * problem.upper.array())
      .matrix();
}

Vector second_start(const Vector& x0) {
  const double offset = 1e-4 * std::sqrt(static_cast<double>(x0.size()));
  return x0.array() + offset;
}

ProblemInstance ScaledProblem::instance() const {
  ProblemInstance scaled = base;
  for (int j = 0; j < base.m; ++j) {
    const double g = gamma[j];
    scaled.objectives[j] = [f = base.objectives[j], g](const Vector& x) { return g * f(x); };
    if (base.has_gradients()) {
      scaled.gradients[j] = [df = base.gradients[j], g](const Vector& x) -> Vector {
        return g * df(x);
      };
    }
    if (base.has_hessians()) {
      scaled.hessians[j] = [d2f = base.hessians[j], g](const Vector& x) -> Matrix {
        return g * d2f(x);
      };
    }
  }
  return scaled;
}

ScaledProblem with_scale(const ProblemInstance& problem, const Vector& gamma) {
  if (gamma.size() != problem.m) throw InvalidInput("gamma must have one entry per objective");
  if (!((gamma.array() > 0.0).all() && (gamma.array() <= 1.0).all()))
    throw InvalidInput("every gamma_j must lie in (0, 1]");
  return ScaledProblem{problem, gamma};
}

ScaledProblem scale_factors(const ProblemInstance& problem, const Vector& x0, GradientSource source,
                            double fd_step) {
  Vector gamma(problem.m);
  for (int j = 0; j < problem.m; ++j) {
    Vector grad;
    if (source == GradientSource::analytic) {
      grad = evaluate_gradient(problem, j, x0);
    } else {
      grad.resize(problem.n);
      Vector probe = x0;
      for (int i = 0; i < problem.n; ++i) {
        probe[i] = x0[i] + fd_step;
        const double up = evaluate_objective(problem, j, probe);
        probe[i] = x0[i] - fd_step;
        const double down = evaluate_objective(problem, j, probe);
        probe[i] = x0[i];
        grad[i] = (up - down) / (2.0 * fd_step);
      }
    }
    gamma[j] = 1.0 / std::max(1.0, grad.lpNorm<Eigen::Infinity>());
  }
  return ScaledProblem{problem, gamma};
}

}  // namespace mcrm
