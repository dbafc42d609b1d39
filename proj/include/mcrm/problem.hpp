#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "mcrm/errors.hpp"

namespace mcrm {

using ScalarFn = std::function<double(const Vector&)>;
using GradientFn = std::function<Vector(const Vector&)>;
using HessianFn = std::function<Matrix(const Vector&)>;

/// Evaluation counters owned by one run (or one call). Never shared between
/// concurrent runs.
struct EvalCounter {
  long long f = 0;  // objective values F_j(x), one per objective
  long long g = 0;  // gradients ∇F_j(x)
  long long h = 0;  // Hessians ∇²F_j(x)

  long long values_and_gradients() const { return f + g; }

  EvalCounter& operator+=(const EvalCounter& other) {
    f += other.f;
    g += other.g;
    h += other.h;
    return *this;
  }
  friend bool operator==(const EvalCounter&, const EvalCounter&) = default;
};

/// m scalar objectives over R^n. Gradients and Hessians are optional; when
/// present there is one evaluator per objective. The box [lower, upper] is
/// only used to generate starting points.
struct ProblemInstance {
  std::string name;
  int n = 0;
  int m = 0;
  std::vector<ScalarFn> objectives;
  std::vector<GradientFn> gradients;
  std::vector<HessianFn> hessians;
  Vector lower;
  Vector upper;
  bool convex = false;

  bool has_gradients() const { return !gradients.empty(); }
  bool has_hessians() const { return !hessians.empty(); }

  /// Throws InvalidInput when the instance is structurally inconsistent.
  void validate() const;
};

/// F(x) in declared objective order. Counts m value evaluations.
Vector evaluate(const ProblemInstance& problem, const Vector& x, EvalCounter* counter = nullptr);

double evaluate_objective(const ProblemInstance& problem, int j, const Vector& x,
                          EvalCounter* counter = nullptr);
Vector evaluate_gradient(const ProblemInstance& problem, int j, const Vector& x,
                         EvalCounter* counter = nullptr);
/// Returns the analytic Hessian, symmetrized.
Matrix evaluate_hessian(const ProblemInstance& problem, int j, const Vector& x,
                        EvalCounter* counter = nullptr);

/// x0 = (1 - eta) * lower + eta * upper, 0 < eta < 1.
Vector make_start(const ProblemInstance& problem, double eta);
/// Componentwise variant: every eta_i in (0, 1).
Vector make_start(const ProblemInstance& problem, const Vector& eta);

/// x1 = x0 + 1e-4 * sqrt(n) added to every component.
Vector second_start(const Vector& x0);

/// Problem whose objectives are gamma_j * F_j.
struct ScaledProblem {
  ProblemInstance base;
  Vector gamma;

  /// The scaled problem as a plain instance; evaluators multiply by gamma_j.
  ProblemInstance instance() const;
};

enum class GradientSource { analytic, central_difference };

/// gamma_j = 1 / max(1, ||∇F_j(x0)||_inf). With `central_difference` the
/// gradient is approximated with step `fd_step` (no derivative evaluators used).
ScaledProblem scale_factors(const ProblemInstance& problem, const Vector& x0,
                            GradientSource source = GradientSource::analytic,
                            double fd_step = 1e-6);

/// Explicit gamma (every entry in (0, 1]).
ScaledProblem with_scale(const ProblemInstance& problem, const Vector& gamma);

// ---------------------------------------------------------------------------
// Registry of analytic test problems, addressable by case-insensitive name.

using ProblemFactory = std::function<ProblemInstance()>;

/// Registered names in registration order.
std::vector<std::string> problem_names();

/// Throws InvalidInput listing the registered names on a miss.
ProblemInstance find_problem(std::string_view name);

bool has_problem(std::string_view name);

/// Adds (or replaces) a problem. Must be called before solver threads start.
void register_problem(const std::string& name, ProblemFactory factory);

// Parameterized members of the corpus.
ProblemInstance make_jos1(int n);
ProblemInstance make_fds(int n);

/// Convex quadratic pair F_j = 1/2 (x - c_j)^T Q_j (x - c_j); Hessian is
/// constant so the Lipschitz constant of the Hessian is zero.
ProblemInstance make_quadratic_pair(const Matrix& q1, const Vector& c1, const Matrix& q2,
                                    const Vector& c2);

/// F_j = 1/2 ||x - a_j||^2 + (c/6) ||x - b_j||^3. Hessian-Lipschitz constant
/// is bounded by 1.5 c and every F_j is nonnegative.
ProblemInstance make_cubic_pair(const Vector& a1, const Vector& b1, const Vector& a2,
                                const Vector& b2, double c);

}  // namespace mcrm
