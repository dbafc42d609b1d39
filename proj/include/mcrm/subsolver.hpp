#pragma once

#include <optional>
#include <vector>

#include "mcrm/model.hpp"

namespace mcrm {

/// Output of the min-max subproblem solver.
struct KktCandidate {
  Vector y;
  SimplexWeights weights;
  double model_value = 0.0;  // eval_max at y
  double residual = 0.0;     // kkt_residual at (y, weights)
  double step_norm = 0.0;    // ||y - base||
};

/// Raised when no candidate passes certification. Carries the best one seen.
class SubsolverFailure : public Error {
 public:
  SubsolverFailure(const std::string& what, std::optional<KktCandidate> best)
      : Error(what), best_(std::move(best)) {}
  const std::optional<KktCandidate>& best() const { return best_; }

 private:
  std::optional<KktCandidate> best_;
};

enum class ThetaMode { relative, absolute };

struct SubsolverConfig {
  ThetaMode theta_mode = ThetaMode::relative;
  double theta = 0.9;   // relative: residual <= theta * ||s||^2
  double tau = 1e-8;    // absolute: residual <= tau
  int max_steps = 100;  // Newton steps per smoothing stage
  int restarts = 2;     // extra randomized starts when the dual bound is not met
  int min_stages = 4;
  int max_stages = 12;
  double mu_factor = 1e-2;  // mu_0 = mu_factor * max_j |M^j| at the warm start
  double slack = 1e-12;     // certification slack

  void validate() const;
  /// Residual bound for a step of norm `step_norm`.
  double residual_bound(double step_norm) const;
};

struct CubicMinimum {
  Vector s;
  double value = 0.0;
};

/// Global minimizer of <g,s> + 1/2 <Hs,s> + (sigma/6) ||s||^3 through an
/// eigendecomposition of H and a scalar root-find on r = ||s||.
CubicMinimum weighted_cubic_min(const Vector& g, const Matrix& h, double sigma);

/// sum_j lambda_j (g_j, H_j).
std::pair<Vector, Matrix> weighted_terms(const CubicModel& model, const Vector& lambda);

/// Simplex weights minimizing || sum_j lambda_j g_j ||.
SimplexWeights min_norm_weights(const std::vector<Vector>& gradients);

/// Phi_mu(s) = mu log sum_j exp(M^j(s) / mu), evaluated stably.
double smoothed_value(const CubicModel& model, double mu, const Vector& s);
/// softmax(M^j(s) / mu).
Vector smoothed_weights(const CubicModel& model, double mu, const Vector& s);
/// Gradient of Phi_mu at s.
Vector smoothed_gradient(const CubicModel& model, double mu, const Vector& s);

struct SmoothedResult {
  Vector s;
  SimplexWeights weights;
  double phi_start = 0.0;
  double phi_end = 0.0;
  int steps = 0;
};

/// Damped Newton descent on Phi_mu from s0 (step variable, not y). Never
/// increases Phi_mu. `gradient_tol` stops the run once ||grad Phi_mu|| is
/// below it.
SmoothedResult smoothed_descent(const CubicModel& model, double mu, const Vector& s0, int budget,
                                double gradient_tol = 0.0);

/// Builds a candidate from a step and weights and measures it through the
/// model (value, residual, step norm).
KktCandidate make_candidate(const CubicModel& model, const Vector& s, const SimplexWeights& w);

/// True when the candidate meets the three subproblem conditions.
bool certified(const KktCandidate& candidate, const SubsolverConfig& config);

/// Approximate KKT pair of min_y max_j M^j(y). Throws SubsolverFailure when
/// nothing can be certified.
KktCandidate solve_subproblem(const CubicModel& model, const SubsolverConfig& config);

}  // namespace mcrm
