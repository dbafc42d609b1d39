#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <boost/algorithm/string.hpp>

#include "CLI11.hpp"
#include "mcrm/harness.hpp"
#include "mcrm/trace.hpp"

namespace fs = std::filesystem;
using namespace mcrm;

namespace {

constexpr int kUsageError = 2;

struct Globals {
  std::string config_file;
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string out = ".";
};

struct SolverFlags {
  std::string mode = "exact";
  std::optional<double> beta;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

McrmConfig build_config(const Globals& g, const SolverFlags& flags) {
  const std::string mode = boost::to_lower_copy(flags.mode);
  McrmConfig config;
  if (mode == "exact" || mode == "i") config = preset("I");
  else if (mode == "e") config = preset("E");
  else if (mode == "df") config = preset("DF");
  else throw UsageError("--mode must be one of exact, df, E, I, DF");
  if (!g.config_file.empty()) apply_config(config, read_key_values_file(g.config_file));
  if (flags.beta) config.beta = *flags.beta;
  config.validate();
  return config;
}

ProblemInstance lookup(const std::string& name) {
  try {
    return find_problem(name);
  } catch (const InvalidInput& e) {
    throw UsageError(e.what());
  }
}

Vector parse_vector(const std::string& text, const std::string& what) {
  std::vector<std::string> parts;
  boost::split(parts, text, boost::is_any_of(","));
  Vector v(static_cast<Eigen::Index>(parts.size()));
  for (std::size_t i = 0; i < parts.size(); ++i) {
    try {
      v[static_cast<Eigen::Index>(i)] = std::stod(boost::trim_copy(parts[i]));
    } catch (const std::exception&) {
      throw UsageError(what + ": cannot parse '" + parts[i] + "'");
    }
  }
  return v;
}

std::ofstream open_output(const Globals& g, const std::string& name) {
  fs::create_directories(g.out);
  const fs::path path = fs::path(g.out) / name;
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  return out;
}

std::string describe(const Vector& v) {
  std::ostringstream os;
  for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? "," : "") << format_double(v[i]);
  return os.str();
}

// ---------------------------------------------------------------------------

struct SolveArgs {
  std::string problem;
  SolverFlags solver;
  std::optional<double> eta;
  std::string x0;
  bool no_scale = false;
};

int cmd_solve(const Globals& g, const SolveArgs& a) {
  const ProblemInstance problem = lookup(a.problem);
  const McrmConfig config = build_config(g, a.solver);
  Vector x0;
  if (!a.x0.empty()) {
    x0 = parse_vector(a.x0, "--x0");
    if (x0.size() != problem.n)
      throw UsageError("--x0 needs " + std::to_string(problem.n) + " components");
  } else if (a.eta) {
    if (!(*a.eta > 0.0 && *a.eta < 1.0)) throw UsageError("--eta must lie in (0, 1)");
    x0 = make_start(problem, *a.eta);
  } else {
    x0 = make_start(problem, random_eta(problem.n, g.seed));
  }
  StartOptions options;
  options.scale = !a.no_scale;
  const RunOutcome o = single_run(problem, config, x0, options, g.seed);
  if (!o.error.empty()) {
    std::cerr << "error: " << o.error << '\n';
    return 1;
  }
  const RunTrace trace = RunTrace::from(o.result);
  {
    auto out = open_output(g, "trace.json");
    write_trace_json(out, trace);
  }
  {
    auto out = open_output(g, "trace.csv");
    write_trace_csv(out, trace);
  }
  const auto& last = o.result.final();
  std::cout << "status=" << to_string(o.result.status) << " T=" << o.result.trace.size()
            << " g_norm=" << format_double(last.g_norm) << " evals_f=" << o.result.evals.f
            << " evals_g=" << o.result.evals.g << " evals_h=" << o.result.evals.h << '\n';
  std::cout << "x=" << describe(o.result.certificate.x)
            << " lambda=" << describe(o.result.certificate.lambda.lambda)
            << " F=" << describe(o.f_unscaled) << '\n';
  if (!o.result.meta.message.empty()) std::cout << "message: " << o.result.meta.message << '\n';
  return o.result.status == RunStatus::converged ? 0 : 1;
}

// ---------------------------------------------------------------------------

struct FrontArgs {
  std::string problem;
  SolverFlags solver;
  int starts = 100;
  bool no_scale = false;
};

int cmd_front(const Globals& g, const FrontArgs& a) {
  const ProblemInstance problem = lookup(a.problem);
  const McrmConfig config = build_config(g, a.solver);
  StartOptions options;
  options.starts = a.starts;
  options.seed = g.seed;
  options.jobs = g.jobs;
  options.scale = !a.no_scale;
  const auto outcomes = multi_start(problem, config, options);
  const auto front = dominance_filter(front_points(outcomes));
  int converged = 0;
  for (const auto& o : outcomes)
    if (o.error.empty() && o.result.status == RunStatus::converged) ++converged;
  if (front.empty()) {
    std::cerr << "error: no run converged\n";
    for (const auto& o : outcomes) {
      std::cerr << "  seed " << o.seed << ": "
                << (o.error.empty() ? to_string(o.result.status) : "error: " + o.error) << '\n';
    }
    return 1;
  }
  auto out = open_output(g, "front.csv");
  write_front_csv(out, front);
  std::cout << "runs=" << outcomes.size() << " converged=" << converged
            << " front_points=" << front.size() << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

struct ProfileArgs {
  std::string problems = "all";
  std::string solvers = "E,I,DF";
  int starts = 10;
  bool no_scale = false;
};

int cmd_profile(const Globals& g, const ProfileArgs& a) {
  CampaignSpec spec;
  if (boost::iequals(a.problems, "all")) {
    spec.problems = problem_names();
  } else {
    boost::split(spec.problems, a.problems, boost::is_any_of(","));
    for (auto& p : spec.problems) boost::trim(p);
    spec.problems.erase(std::remove(spec.problems.begin(), spec.problems.end(), std::string()),
                        spec.problems.end());
  }
  if (spec.problems.empty()) throw UsageError("--problems is empty");
  for (const auto& p : spec.problems) lookup(p);
  std::vector<std::string> solvers;
  boost::split(solvers, a.solvers, boost::is_any_of(","));
  for (auto& s : solvers) {
    boost::trim(s);
    SolverFlags flags;
    flags.mode = s;
    spec.solvers.emplace_back(s, build_config(g, flags));
  }
  spec.starts_per_problem = a.starts;
  spec.seed = g.seed;
  spec.jobs = g.jobs;
  spec.scale = !a.no_scale;
  const auto rows = run_campaign(spec);
  {
    auto out = open_output(g, "instances.csv");
    write_instances_csv(out, rows);
  }
  const auto taus = tau_grid();
  {
    auto out = open_output(g, "profile_outer_iterations.csv");
    write_profile_csv(out, taus, performance_profile(rows, ProfileMetric::outer_iterations, taus));
  }
  {
    auto out = open_output(g, "profile_evaluations.csv");
    write_profile_csv(out, taus, performance_profile(rows, ProfileMetric::evaluations, taus));
  }
  for (const auto& [name, config] : spec.solvers) {
    int solved = 0, total = 0;
    for (const auto& r : rows) {
      if (r.solver != name) continue;
      ++total;
      if (r.status == RunStatus::converged) ++solved;
    }
    std::cout << name << ": " << solved << "/" << total << " converged\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct VerifyArgs {
  std::string trace;
  std::optional<double> lipschitz;
  std::optional<double> kappa_g;
  std::optional<double> kappa_h;
  std::string f_lower;
};

int cmd_verify(const Globals& g, const VerifyArgs& a) {
  RunTrace trace;
  try {
    trace = read_trace_json_file(a.trace);
  } catch (const ParseError& e) {
    std::cerr << a.trace << ": " << e.what() << '\n';
    return 1;
  }
  VerifyInputs inputs;
  inputs.lipschitz = a.lipschitz;
  inputs.kappa_G = a.kappa_g;
  inputs.kappa_H = a.kappa_h;
  if (!a.f_lower.empty()) inputs.f_lower = parse_vector(a.f_lower, "--f-lower");
  const TraceReport report = verify_trace(trace, inputs);
  write_report_text(std::cout, report);
  auto out = open_output(g, "report.json");
  write_report_json(out, report);
  return report.passed() ? 0 : 1;
}

// ---------------------------------------------------------------------------

struct LogregArgs {
  std::string data;
  bool synthetic = false;
  bool header = false;
  int label_column = -1;
  int train_count = 468;
  int starts = 300;
  int dimension = 10;
  int test_count = 100;
};

int cmd_logreg(const Globals& g, const LogregArgs& a) {
  LogisticDataset data;
  if (a.synthetic) {
    data = synthetic_dataset(a.dimension, a.train_count, a.test_count, g.seed);
  } else {
    if (a.data.empty()) throw UsageError("logreg needs --data <csv> or --synthetic");
    CsvOptions options;
    options.header = a.header;
    options.label_column = a.label_column;
    options.train_count = a.train_count;
    try {
      data = load_csv(a.data, options);
    } catch (const ParseError& e) {
      std::cerr << a.data << ": " << e.what() << '\n';
      return 1;
    }
  }
  SolverFlags flags;
  flags.mode = "df";
  const McrmConfig config = build_config(g, flags);
  const LogisticStudy study = logistic_study(data, config, a.starts, g.seed, g.jobs);
  auto out = open_output(g, "logreg.csv");
  write_logistic_csv(out, study);
  std::cout << "runs=" << study.runs << " converged=" << study.converged
            << " front_points=" << study.front.size() << '\n';
  auto show = [&](const char* label, const std::optional<std::size_t>& k) {
    if (!k) return;
    const auto& p = study.front[*k];
    std::cout << label << ": F1=" << format_double(p.point.f[0])
              << " F2=" << format_double(p.point.f[1])
              << " train_accuracy=" << p.train_accuracy << " test_accuracy=" << p.test_accuracy
              << '\n';
  };
  show("min_f1", study.min_f1);
  show("knee", study.knee);
  show("min_f2", study.min_f2);
  return study.front.empty() ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiobjective cubic regularization solver"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_file, "key = value configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "base random seed");
  app.add_option("--jobs", g.jobs, "concurrent runs")->check(CLI::PositiveNumber);
  app.add_option("--out", g.out, "output directory");

  auto add_solver_flags = [](CLI::App* sub, SolverFlags& flags) {
    sub->add_option("--mode", flags.mode, "exact | df | E | I | DF");
    sub->add_option("--beta", flags.beta, "finite-difference step exponent");
  };

  SolveArgs solve;
  auto* solve_cmd = app.add_subcommand("solve", "single run, writes trace.json and trace.csv");
  solve_cmd->add_option("--problem", solve.problem)->required();
  add_solver_flags(solve_cmd, solve.solver);
  solve_cmd->add_option("--eta", solve.eta, "start x0 = (1 - eta) lower + eta upper");
  solve_cmd->add_option("--x0", solve.x0, "explicit start, comma separated");
  solve_cmd->add_flag("--no-scale", solve.no_scale, "disable objective scaling");

  FrontArgs front;
  auto* front_cmd = app.add_subcommand("front", "multi-start Pareto front, writes front.csv");
  front_cmd->add_option("--problem", front.problem)->required();
  add_solver_flags(front_cmd, front.solver);
  front_cmd->add_option("--starts", front.starts)->check(CLI::PositiveNumber);
  front_cmd->add_flag("--no-scale", front.no_scale, "disable objective scaling");

  ProfileArgs profile;
  auto* profile_cmd = app.add_subcommand("profile", "campaign and performance profiles");
  profile_cmd->add_option("--problems", profile.problems, "comma separated names or 'all'");
  profile_cmd->add_option("--solvers", profile.solvers, "comma separated presets (E, I, DF)");
  profile_cmd->add_option("--starts", profile.starts)->check(CLI::PositiveNumber);
  profile_cmd->add_flag("--no-scale", profile.no_scale, "disable objective scaling");

  VerifyArgs verify;
  auto* verify_cmd = app.add_subcommand("verify", "re-check a trace, writes report.json");
  verify_cmd->add_option("trace", verify.trace, "trace JSON file")->required();
  verify_cmd->add_option("--L", verify.lipschitz, "Lipschitz constant of the Hessians");
  verify_cmd->add_option("--kappa-G", verify.kappa_g);
  verify_cmd->add_option("--kappa-H", verify.kappa_h);
  verify_cmd->add_option("--f-lower", verify.f_lower, "lower bounds, comma separated");

  LogregArgs logreg;
  auto* logreg_cmd = app.add_subcommand("logreg", "logistic regression trade-off, writes logreg.csv");
  logreg_cmd->add_option("--data", logreg.data, "CSV with features and a 0/1 label");
  logreg_cmd->add_flag("--synthetic", logreg.synthetic, "use a separable synthetic dataset");
  logreg_cmd->add_flag("--header", logreg.header, "CSV has a header row");
  logreg_cmd->add_option("--label-column", logreg.label_column, "negative counts from the end");
  logreg_cmd->add_option("--train-count", logreg.train_count)->check(CLI::PositiveNumber);
  logreg_cmd->add_option("--test-count", logreg.test_count, "synthetic only")->check(CLI::PositiveNumber);
  logreg_cmd->add_option("--dimension", logreg.dimension, "synthetic only")->check(CLI::PositiveNumber);
  logreg_cmd->add_option("--starts", logreg.starts)->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*solve_cmd) return cmd_solve(g, solve);
    if (*front_cmd) return cmd_front(g, front);
    if (*profile_cmd) return cmd_profile(g, profile);
    if (*verify_cmd) return cmd_verify(g, verify);
    if (*logreg_cmd) return cmd_logreg(g, logreg);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsageError;
  } catch (const InvalidInput& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kUsageError;
}
