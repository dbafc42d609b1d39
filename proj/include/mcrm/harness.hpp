#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mcrm/driver.hpp"
#include "mcrm/logistic.hpp"

namespace mcrm {

// ---------------------------------------------------------------------------
// Configuration files: one `key = value` per line, '#' starts a comment.

using KeyValues = std::map<std::string, std::string>;

/// Throws ParseError with the line number on malformed lines or duplicate keys.
KeyValues read_key_values(std::istream& in);
KeyValues read_key_values_file(const std::string& path);

/// Applies known keys to `config`; unknown keys raise InvalidInput.
/// Keys: sigma1, alpha, beta, h_floor, gradient_mode, hessian_mode, theta_mode
/// (relative | absolute), theta, tau, subsolver_max_steps, subsolver_restarts,
/// max_outer, max_inner, stop_rule (exact_grad | df_pair), stop_threshold.
void apply_config(McrmConfig& config, const KeyValues& values);

/// Named solver presets: "E" (exact, absolute tau = 1e-8), "I" (exact,
/// relative theta = 0.9), "DF" (derivative-free, relative theta = 0.9).
McrmConfig preset(const std::string& name);

// ---------------------------------------------------------------------------
// Multi-start runs.

/// Componentwise eta in (0,1) drawn from a generator seeded with `seed`.
Vector random_eta(int n, std::uint64_t seed);

struct StartOptions {
  int starts = 1;
  std::uint64_t seed = 0;  // start k uses seed + k
  int jobs = 1;
  bool scale = true;       // gamma_j = 1 / max(1, ||grad F_j(x0)||_inf) per start
  std::optional<Vector> gamma;  // fixed scale factors; overrides `scale`
};

struct RunOutcome {
  std::uint64_t seed = 0;
  Vector x0;
  Vector gamma;           // scale factors used (all ones when unscaled)
  RunResult result;       // on the scaled problem
  Vector f_unscaled;      // F(x_T) of the original problem
  double wall_time = 0.0; // seconds
  std::string error;      // set when the run threw before producing a result
};

/// Runs `options.starts` independent solves, in parallel up to `jobs`.
/// Output order follows the seed regardless of completion order.
std::vector<RunOutcome> multi_start(const ProblemInstance& problem, const McrmConfig& config,
                                    const StartOptions& options);

/// Solves from an explicit start, x1 = second_start(x0).
RunOutcome single_run(const ProblemInstance& problem, const McrmConfig& config, const Vector& x0,
                      const StartOptions& options, std::uint64_t seed = 0);

// ---------------------------------------------------------------------------
// Pareto fronts.

struct FrontPoint {
  Vector x;
  Vector f;
  double g_norm = 0.0;
  RunStatus status = RunStatus::converged;
  std::uint64_t start_seed = 0;
};

/// a dominates b: a <= b componentwise with one strict inequality.
bool dominates(const Vector& a, const Vector& b);

/// Keeps the non-dominated points; identical f-vectors collapse to the one
/// with the lowest seed. Output is sorted by f (lexicographic), then seed.
std::vector<FrontPoint> dominance_filter(const std::vector<FrontPoint>& points);

/// Index of the point farthest from the chord joining the two extremes of a
/// two-objective front, in objective space normalized to [0,1]^2.
std::optional<std::size_t> knee_index(const std::vector<FrontPoint>& front);

std::vector<FrontPoint> front_points(const std::vector<RunOutcome>& outcomes,
                                     bool converged_only = true);

void write_front_csv(std::ostream& out, const std::vector<FrontPoint>& front);
std::vector<FrontPoint> read_front_csv(std::istream& in);

// ---------------------------------------------------------------------------
// Performance profiles.

struct InstanceRow {
  std::string problem;
  std::uint64_t seed = 0;
  std::string solver;
  RunStatus status = RunStatus::converged;
  int outer_iters = 0;
  long long f_evals = 0;
  long long g_evals = 0;
  double wall_time = 0.0;
};

enum class ProfileMetric { outer_iterations, evaluations };

/// 1, 1.05, ..., 10.
std::vector<double> tau_grid();

struct ProfileCurve {
  std::string solver;
  std::vector<double> rho;  // one entry per tau
};

/// rho_s(tau) = fraction of instances with cost_s <= tau * best cost.
/// Instances a solver did not converge on cost infinity.
std::vector<ProfileCurve> performance_profile(const std::vector<InstanceRow>& rows,
                                              ProfileMetric metric,
                                              const std::vector<double>& taus);

void write_instances_csv(std::ostream& out, const std::vector<InstanceRow>& rows);
std::vector<InstanceRow> read_instances_csv(std::istream& in);
void write_profile_csv(std::ostream& out, const std::vector<double>& taus,
                       const std::vector<ProfileCurve>& curves);

struct CampaignSpec {
  std::vector<std::string> problems;
  int starts_per_problem = 1;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, McrmConfig>> solvers;
  int jobs = 1;
  bool scale = true;
};

/// Rows sorted by (problem, seed, solver).
std::vector<InstanceRow> run_campaign(const CampaignSpec& spec);

// ---------------------------------------------------------------------------
// Logistic trade-off study.

struct LogisticPoint {
  FrontPoint point;  // f holds the unscaled (F_1, F_2)
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
};

struct LogisticStudy {
  std::vector<LogisticPoint> front;  // sorted by F_1
  std::optional<std::size_t> min_f1;
  std::optional<std::size_t> min_f2;
  std::optional<std::size_t> knee;
  int runs = 0;
  int converged = 0;
};

/// Multi-start derivative-free runs on (0.1 F_1, F_2) with starts in [-10, 10]^n.
LogisticStudy logistic_study(const LogisticDataset& data, const McrmConfig& config, int starts,
                             std::uint64_t seed, int jobs);

void write_logistic_csv(std::ostream& out, const LogisticStudy& study);

/// Floats with 17 significant digits.
std::string format_double(double value);

}  // namespace mcrm
