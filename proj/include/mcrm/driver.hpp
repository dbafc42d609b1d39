#pragma once

#include <string>
#include <vector>

#include "mcrm/subsolver.hpp"

namespace mcrm {

enum class StopKind { exact_grad, df_pair };

/// exact_grad: g^2 <= threshold. df_pair: g <= threshold and step^2 <= threshold.
struct StopRule {
  StopKind kind = StopKind::exact_grad;
  double threshold = 0.0;

  static StopRule exact_grad();
  static StopRule df_pair();
};

/// 10 * sqrt(machine epsilon) with epsilon = 2^-52.
double default_exact_threshold();

struct McrmConfig {
  double sigma1 = 2e-2;
  double alpha = 2.0;
  SubsolverConfig subsolver;
  DerivativeMode mode;
  double beta = 0.5;
  double h_floor = -1.0;  // negative: 1e-12 * max(1, ||x||)
  int max_outer = 1000;
  int max_inner = 60;
  StopRule stop = StopRule::exact_grad();

  /// Exact derivatives, relative theta = 0.9, gradient-norm stop.
  static McrmConfig exact();
  /// Central gradients, value-based cross Hessians, beta = 1/2, paired stop.
  static McrmConfig derivative_free();

  StepRule step_rule() const { return {beta, alpha, h_floor}; }
  void validate() const;
};

enum class RunStatus { converged, max_outer_reached, subsolver_failure, evaluation_failure,
                       degenerate_step };

std::string to_string(RunStatus status);
RunStatus parse_run_status(std::string_view text);

/// Record t describes x_t. Fields describing the accepted step out of x_t
/// (i_t, model_sigma, model_value, residual) are unset (-1 / NaN) on the last
/// record.
struct IterationRecord {
  int t = 0;
  Vector x;
  double sigma = 0.0;
  int i_t = -1;
  SimplexWeights lambda;
  Vector f_values;
  double step_norm = 0.0;  // ||x_t - x_{t-1}||
  double g_norm = 0.0;     // ||sum_j lambda_j grad F_j(x_t)||, approximate in derivative-free modes
  EvalCounter evals;       // cumulative when the record was written
  double model_sigma = 0.0;
  double model_value = 0.0;
  double residual = 0.0;
  double h_used = 0.0;  // finite-difference step of the bundle at x_t, 0 if exact
};

struct Certificate {
  Vector x;
  SimplexWeights lambda;
  double g_norm = 0.0;
};

struct TraceMeta {
  std::string problem;
  int n = 0;
  int m = 0;
  Vector x0;
  McrmConfig config;
  RunStatus status = RunStatus::converged;
  std::string message;
};

struct RunResult {
  RunStatus status = RunStatus::converged;
  std::vector<IterationRecord> trace;
  Certificate certificate;
  EvalCounter evals;
  TraceMeta meta;

  /// Last record. Throws when the trace is empty.
  const IterationRecord& final() const;
};

/// Smallest i >= 0 with alpha^(i-1) sigma_t >= sigma1.
int initial_inner_index(double sigma_t, double sigma1, double alpha);

/// alpha^(i-1) sigma_t, the regularization carried into the next iteration.
double next_sigma(double sigma_t, double alpha, int i);

/// alpha^i sigma_t, the regularization of the model at inner index i.
double model_sigma(double sigma_t, double alpha, int i);

/// F_j(old) - F_j(new) >= (alpha^i sigma_t / 12) new^3 - (sigma_t / 12) prev^3 for every j.
bool line_search_accept(const Vector& f_old, const Vector& f_new, double sigma_t, double alpha,
                        int i, double new_step_norm, double prev_step_norm);

bool stop_check(const IterationRecord& record, const StopRule& rule);

/// Runs the method from (x0, x1).
RunResult run(const ProblemInstance& problem, const McrmConfig& config, const Vector& x0,
              const Vector& x1);

}  // namespace mcrm
