#include "mcrm/driver.hpp"

#include <cmath>
#include <limits>
#include <optional>

namespace mcrm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double weighted_gradient_norm(const std::vector<Vector>& gradients, const Vector& lambda) {
  Vector total = Vector::Zero(gradients.front().size());
  for (std::size_t j = 0; j < gradients.size(); ++j) total += lambda[j] * gradients[j];
  return total.norm();
}

}  // namespace

double default_exact_threshold() { return 10.0 * std::sqrt(std::ldexp(1.0, -52)); }

StopRule StopRule::exact_grad() { return {StopKind::exact_grad, default_exact_threshold()}; }

StopRule StopRule::df_pair() { return {StopKind::df_pair, std::sqrt(default_exact_threshold())}; }

McrmConfig McrmConfig::exact() { return McrmConfig{}; }

McrmConfig McrmConfig::derivative_free() {
  McrmConfig c;
  c.mode = derivative_free_mode();
  c.beta = 0.5;
  c.stop = StopRule::df_pair();
  return c;
}

void McrmConfig::validate() const {
  if (!(sigma1 > 0.0)) throw InvalidInput("sigma1 must be positive");
  if (!(alpha > 1.0)) throw InvalidInput("alpha must exceed 1");
  if (!(beta >= 0.0)) throw InvalidInput("beta must be nonnegative");
  if (max_outer < 1) throw InvalidInput("max_outer must be at least 1");
  if (max_inner < 1) throw InvalidInput("max_inner must be at least 1");
  if (!(stop.threshold >= 0.0)) throw InvalidInput("stop threshold must be nonnegative");
  subsolver.validate();
}

std::string to_string(RunStatus status) {
  switch (status) {
    case RunStatus::converged: return "converged";
    case RunStatus::max_outer_reached: return "max_outer_reached";
    case RunStatus::subsolver_failure: return "subsolver_failure";
    case RunStatus::evaluation_failure: return "evaluation_failure";
    case RunStatus::degenerate_step: return "degenerate_step";
  }
  return "?";
}

RunStatus parse_run_status(std::string_view text) {
  for (auto s : {RunStatus::converged, RunStatus::max_outer_reached, RunStatus::subsolver_failure,
                 RunStatus::evaluation_failure, RunStatus::degenerate_step}) {
    if (text == to_string(s)) return s;
  }
  throw InvalidInput("unknown run status '" + std::string(text) + "'");
}

const IterationRecord& RunResult::final() const {
  if (trace.empty()) throw InvalidInput("run produced no records");
  return trace.back();
}

int initial_inner_index(double sigma_t, double sigma1, double alpha) {
  int i = 0;
  while (next_sigma(sigma_t, alpha, i) < sigma1) ++i;
  return i;
}

double next_sigma(double sigma_t, double alpha, int i) { return std::pow(alpha, i - 1) * sigma_t; }

double model_sigma(double sigma_t, double alpha, int i) { return std::pow(alpha, i) * sigma_t; }

bool line_search_accept(const Vector& f_old, const Vector& f_new, double sigma_t, double alpha,
                        int i, double new_step_norm, double prev_step_norm) {
  if (f_old.size() != f_new.size()) throw InvalidInput("line search: objective count mismatch");
  if (!f_old.allFinite() || !f_new.allFinite() || !std::isfinite(new_step_norm) ||
      !std::isfinite(prev_step_norm)) {
    throw EvaluationFailure(-1, f_new, "line search: non-finite input");
  }
  const double gain = model_sigma(sigma_t, alpha, i) / 12.0 * std::pow(new_step_norm, 3) -
                      sigma_t / 12.0 * std::pow(prev_step_norm, 3);
  for (Eigen::Index j = 0; j < f_old.size(); ++j) {
    if (f_old[j] - f_new[j] < gain) return false;
  }
  return true;
}

bool stop_check(const IterationRecord& record, const StopRule& rule) {
  if (rule.kind == StopKind::exact_grad) return record.g_norm * record.g_norm <= rule.threshold;
  return record.g_norm <= rule.threshold && record.step_norm * record.step_norm <= rule.threshold;
}

RunResult run(const ProblemInstance& problem, const McrmConfig& config, const Vector& x0,
              const Vector& x1) {
  problem.validate();
  config.validate();
  if (x0.size() != problem.n || x1.size() != problem.n)
    throw InvalidInput("starting points have the wrong dimension");
  const bool exact = config.mode.exact();
  if (!exact && x0 == x1)
    throw InvalidInput("finite-difference modes need x0 != x1");

  const StepRule rule = config.step_rule();
  RunResult result;
  result.meta.problem = problem.name;
  result.meta.n = problem.n;
  result.meta.m = problem.m;
  result.meta.x0 = x0;
  result.meta.config = config;

  EvalCounter counter;
  auto finish = [&](RunStatus status, std::string message = {}) {
    result.status = status;
    result.meta.status = status;
    result.meta.message = std::move(message);
    result.evals = counter;
    if (!result.trace.empty()) {
      const auto& last = result.trace.back();
      result.certificate = {last.x, last.lambda, last.g_norm};
    }
    return result;
  };

  Vector x_prev = x0;
  Vector x = x1;
  double sigma = config.sigma1;
  Vector f;
  DerivativeBundle bundle;
  try {
    f = evaluate(problem, x, &counter);
    bundle = build_bundle(problem, config.mode, rule, x, x_prev,
                          initial_inner_index(sigma, config.sigma1, config.alpha), &counter);
  } catch (const EvaluationFailure& e) {
    return finish(RunStatus::evaluation_failure, e.what());
  } catch (const DegenerateStep& e) {
    return finish(RunStatus::degenerate_step, e.what());
  }

  IterationRecord record;
  record.t = 1;
  record.x = x;
  record.sigma = sigma;
  record.lambda = min_norm_weights(bundle.gradients);
  record.f_values = f;
  record.step_norm = (x - x_prev).norm();
  record.g_norm = weighted_gradient_norm(bundle.gradients, record.lambda.lambda);
  record.evals = counter;
  record.h_used = bundle.h_used();
  record.model_sigma = record.model_value = record.residual = kNaN;
  result.trace.push_back(record);
  if (stop_check(record, config.stop)) return finish(RunStatus::converged);

  for (int t = 1; t < config.max_outer; ++t) {
    IterationRecord& current = result.trace.back();
    const int i_start = initial_inner_index(sigma, config.sigma1, config.alpha);
    std::optional<KktCandidate> accepted;
    Vector f_new;
    int i = i_start;
    for (; i < i_start + config.max_inner; ++i) {
      // Exact bundles do not depend on i; finite-difference bundles tighten with i.
      if (!exact && bundle.inner_index != i) {
        try {
          bundle = build_bundle(problem, config.mode, rule, x, x_prev, i, &counter);
        } catch (const EvaluationFailure& e) {
          return finish(RunStatus::evaluation_failure, e.what());
        } catch (const DegenerateStep& e) {
          return finish(RunStatus::degenerate_step, e.what());
        }
      }
      const CubicModel model(bundle, model_sigma(sigma, config.alpha, i));
      KktCandidate candidate;
      try {
        candidate = solve_subproblem(model, config.subsolver);
      } catch (const SubsolverFailure&) {
        continue;
      }
      try {
        f_new = evaluate(problem, candidate.y, &counter);
      } catch (const EvaluationFailure&) {
        continue;  // a non-finite trial value counts as a rejected step
      }
      if (line_search_accept(f, f_new, sigma, config.alpha, i, candidate.step_norm,
                             current.step_norm)) {
        accepted = candidate;
        break;
      }
    }
    if (!accepted) {
      return finish(RunStatus::subsolver_failure,
                    "no acceptable step within " + std::to_string(config.max_inner) +
                        " inner iterations");
    }

    current.i_t = i;
    current.model_sigma = model_sigma(sigma, config.alpha, i);
    current.model_value = accepted->model_value;
    current.residual = accepted->residual;

    const double sigma_next = next_sigma(sigma, config.alpha, i);
    x_prev = x;
    x = accepted->y;
    f = f_new;
    sigma = sigma_next;

    IterationRecord next;
    next.t = t + 1;
    next.x = x;
    next.sigma = sigma;
    next.lambda = accepted->weights;
    next.f_values = f;
    next.step_norm = accepted->step_norm;
    next.model_sigma = next.model_value = next.residual = kNaN;

    bool degenerate = false;
    if (!exact && next.step_norm == 0.0) {
      // The bundle at x_t is still the bundle at x_{t+1}.
      degenerate = true;
    } else {
      try {
        bundle = build_bundle(problem, config.mode, rule, x, x_prev,
                              initial_inner_index(sigma, config.sigma1, config.alpha), &counter);
      } catch (const EvaluationFailure& e) {
        result.trace.push_back(next);
        return finish(RunStatus::evaluation_failure, e.what());
      } catch (const DegenerateStep& e) {
        result.trace.push_back(next);
        return finish(RunStatus::degenerate_step, e.what());
      }
    }
    next.g_norm = weighted_gradient_norm(bundle.gradients, next.lambda.lambda);
    next.h_used = bundle.h_used();
    next.evals = counter;
    result.trace.push_back(next);

    if (stop_check(next, config.stop)) return finish(RunStatus::converged);
    if (degenerate) return finish(RunStatus::degenerate_step, "zero step in a finite-difference mode");
  }
  return finish(RunStatus::max_outer_reached);
}

}  // namespace mcrm
