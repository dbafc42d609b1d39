#include "mcrm/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>
#include <tuple>

#include <boost/algorithm/string.hpp>

namespace mcrm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double to_double(const std::string& text, std::size_t line, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ParseError(line, what + ": expected a number, got '" + text + "'");
  }
}

long long to_integer(const std::string& text, std::size_t line, const std::string& what) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ParseError(line, what + ": expected an integer, got '" + text + "'");
  }
}

std::uint64_t to_unsigned(const std::string& text, std::size_t line, const std::string& what) {
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(text, &used);
    if (used != text.size() || text.front() == '-') throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ParseError(line, what + ": expected a nonnegative integer, got '" + text + "'");
  }
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  boost::split(cells, line, boost::is_any_of(","));
  for (auto& c : cells) boost::trim(c);
  return cells;
}

bool next_data_line(std::istream& in, std::string& line, std::size_t& line_no) {
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!boost::trim_copy(line).empty()) return true;
  }
  return false;
}

// Runs task(k) for k in [0, count) on up to `jobs` threads.
void parallel_for(int count, int jobs, const std::function<void(int)>& task) {
  jobs = std::max(1, std::min(jobs, count));
  if (jobs == 1) {
    for (int k = 0; k < count; ++k) task(k);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(jobs);
  for (int w = 0; w < jobs; ++w) {
    pool.emplace_back([&] {
      for (int k = next++; k < count; k = next++) task(k);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

// ---------------------------------------------------------------------------
// Configuration

KeyValues read_key_values(std::istream& in) {
  KeyValues values;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    boost::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(line_no, "expected 'key = value'");
    std::string key = boost::trim_copy(line.substr(0, eq));
    std::string value = boost::trim_copy(line.substr(eq + 1));
    if (key.empty()) throw ParseError(line_no, "empty key");
    if (value.empty()) throw ParseError(line_no, "empty value for '" + key + "'");
    if (!values.emplace(key, value).second) throw ParseError(line_no, "duplicate key '" + key + "'");
  }
  return values;
}

KeyValues read_key_values_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open config file '" + path + "'");
  return read_key_values(in);
}

void apply_config(McrmConfig& config, const KeyValues& values) {
  auto number = [](const std::string& key, const std::string& v) {
    try {
      return to_double(v, 0, key);
    } catch (const ParseError& e) {
      throw InvalidInput(e.what());
    }
  };
  auto integer = [](const std::string& key, const std::string& v) {
    try {
      return static_cast<int>(to_integer(v, 0, key));
    } catch (const ParseError& e) {
      throw InvalidInput(e.what());
    }
  };
  for (const auto& [key, value] : values) {
    if (key == "sigma1") config.sigma1 = number(key, value);
    else if (key == "alpha") config.alpha = number(key, value);
    else if (key == "beta") config.beta = number(key, value);
    else if (key == "h_floor") config.h_floor = number(key, value);
    else if (key == "gradient_mode") config.mode.gradient = parse_gradient_mode(value);
    else if (key == "hessian_mode") config.mode.hessian = parse_hessian_mode(value);
    else if (key == "theta") config.subsolver.theta = number(key, value);
    else if (key == "tau") config.subsolver.tau = number(key, value);
    else if (key == "subsolver_max_steps") config.subsolver.max_steps = integer(key, value);
    else if (key == "subsolver_restarts") config.subsolver.restarts = integer(key, value);
    else if (key == "max_outer") config.max_outer = integer(key, value);
    else if (key == "max_inner") config.max_inner = integer(key, value);
    else if (key == "stop_threshold") config.stop.threshold = number(key, value);
    else if (key == "theta_mode") {
      if (value == "relative") config.subsolver.theta_mode = ThetaMode::relative;
      else if (value == "absolute") config.subsolver.theta_mode = ThetaMode::absolute;
      else throw InvalidInput("theta_mode must be 'relative' or 'absolute'");
    } else if (key == "stop_rule") {
      if (value == "exact_grad") config.stop.kind = StopKind::exact_grad;
      else if (value == "df_pair") config.stop.kind = StopKind::df_pair;
      else throw InvalidInput("stop_rule must be 'exact_grad' or 'df_pair'");
    } else {
      throw InvalidInput("unknown config key '" + key + "'");
    }
  }
  // A stop rule switched without an explicit threshold takes that rule's default.
  if (values.count("stop_rule") && !values.count("stop_threshold")) {
    config.stop.threshold = config.stop.kind == StopKind::exact_grad
                                ? StopRule::exact_grad().threshold
                                : StopRule::df_pair().threshold;
  }
  config.validate();
}

McrmConfig preset(const std::string& name) {
  const std::string key = boost::to_upper_copy(name);
  if (key == "E") {
    McrmConfig c = McrmConfig::exact();
    c.subsolver.theta_mode = ThetaMode::absolute;
    c.subsolver.tau = 1e-8;
    return c;
  }
  if (key == "I") return McrmConfig::exact();
  if (key == "DF") return McrmConfig::derivative_free();
  throw InvalidInput("unknown preset '" + name + "' (expected E, I or DF)");
}

// ---------------------------------------------------------------------------
// Multi-start

Vector random_eta(int n, std::uint64_t seed) {
  if (n < 1) throw InvalidInput("random_eta: n must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vector eta(n);
  for (int i = 0; i < n; ++i) {
    double u = 0.0;
    while (u <= 0.0) u = unit(rng);
    eta[i] = u;
  }
  return eta;
}

RunOutcome single_run(const ProblemInstance& problem, const McrmConfig& config, const Vector& x0,
                      const StartOptions& options, std::uint64_t seed) {
  RunOutcome out;
  out.seed = seed;
  out.x0 = x0;
  out.gamma = Vector::Ones(problem.m);
  const auto begin = std::chrono::steady_clock::now();
  try {
    ProblemInstance target = problem;
    if (options.gamma) {
      const ScaledProblem scaled = with_scale(problem, *options.gamma);
      out.gamma = scaled.gamma;
      target = scaled.instance();
    } else if (options.scale) {
      const ScaledProblem scaled =
          scale_factors(problem, x0,
                        problem.has_gradients() ? GradientSource::analytic
                                                : GradientSource::central_difference);
      out.gamma = scaled.gamma;
      target = scaled.instance();
    }
    out.result = run(target, config, x0, second_start(x0));
    if (!out.result.trace.empty()) out.f_unscaled = evaluate(problem, out.result.final().x);
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  out.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - begin).count();
  return out;
}

std::vector<RunOutcome> multi_start(const ProblemInstance& problem, const McrmConfig& config,
                                    const StartOptions& options) {
  if (options.starts < 1) throw InvalidInput("starts must be at least 1");
  problem.validate();
  config.validate();
  std::vector<RunOutcome> outcomes(options.starts);
  parallel_for(options.starts, options.jobs, [&](int k) {
    const std::uint64_t seed = options.seed + static_cast<std::uint64_t>(k);
    const Vector x0 = make_start(problem, random_eta(problem.n, seed));
    outcomes[k] = single_run(problem, config, x0, options, seed);
  });
  return outcomes;
}

// ---------------------------------------------------------------------------
// Fronts

bool dominates(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw InvalidInput("dominates: size mismatch");
  bool strict = false;
  for (Eigen::Index j = 0; j < a.size(); ++j) {
    if (a[j] > b[j]) return false;
    if (a[j] < b[j]) strict = true;
  }
  return strict;
}

namespace {

bool f_less(const Vector& a, const Vector& b) {
  return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
}

}  // namespace

std::vector<FrontPoint> dominance_filter(const std::vector<FrontPoint>& points) {
  std::vector<FrontPoint> sorted;
  sorted.reserve(points.size());
  for (const auto& p : points) {
    if (p.f.allFinite()) sorted.push_back(p);
  }
  std::sort(sorted.begin(), sorted.end(), [](const FrontPoint& a, const FrontPoint& b) {
    if (f_less(a.f, b.f)) return true;
    if (f_less(b.f, a.f)) return false;
    return a.start_seed < b.start_seed;
  });
  std::vector<FrontPoint> unique;
  for (const auto& p : sorted) {
    if (!unique.empty() && unique.back().f == p.f) continue;
    unique.push_back(p);
  }
  std::vector<FrontPoint> front;
  for (const auto& p : unique) {
    const bool dominated = std::any_of(unique.begin(), unique.end(),
                                       [&](const FrontPoint& q) { return dominates(q.f, p.f); });
    if (!dominated) front.push_back(p);
  }
  return front;
}

std::optional<std::size_t> knee_index(const std::vector<FrontPoint>& front) {
  if (front.size() < 3 || front.front().f.size() != 2) return std::nullopt;
  double lo1 = kInf, hi1 = -kInf, lo2 = kInf, hi2 = -kInf;
  std::size_t first = 0, last = 0;
  for (std::size_t k = 0; k < front.size(); ++k) {
    const Vector& f = front[k].f;
    if (f[0] < lo1) { lo1 = f[0]; first = k; }
    if (f[0] > hi1) { hi1 = f[0]; last = k; }
    lo2 = std::min(lo2, f[1]);
    hi2 = std::max(hi2, f[1]);
  }
  if (!(hi1 > lo1) || !(hi2 > lo2)) return std::nullopt;
  auto normalized = [&](std::size_t k) {
    return Eigen::Vector2d((front[k].f[0] - lo1) / (hi1 - lo1), (front[k].f[1] - lo2) / (hi2 - lo2));
  };
  const Eigen::Vector2d a = normalized(first);
  const Eigen::Vector2d b = normalized(last);
  const Eigen::Vector2d d = b - a;
  const double len = d.norm();
  std::optional<std::size_t> best;
  double best_dist = 0.0;
  for (std::size_t k = 0; k < front.size(); ++k) {
    if (k == first || k == last) continue;
    const Eigen::Vector2d p = normalized(k) - a;
    const double dist = std::abs(d.x() * p.y() - d.y() * p.x()) / len;
    if (!best || dist > best_dist) {
      best = k;
      best_dist = dist;
    }
  }
  return best;
}

std::vector<FrontPoint> front_points(const std::vector<RunOutcome>& outcomes, bool converged_only) {
  std::vector<FrontPoint> points;
  for (const auto& o : outcomes) {
    if (!o.error.empty() || o.result.trace.empty()) continue;
    if (converged_only && o.result.status != RunStatus::converged) continue;
    const auto& last = o.result.final();
    points.push_back({last.x, o.f_unscaled, last.g_norm, o.result.status, o.seed});
  }
  return points;
}

void write_front_csv(std::ostream& out, const std::vector<FrontPoint>& front) {
  const Eigen::Index m = front.empty() ? 0 : front.front().f.size();
  const Eigen::Index n = front.empty() ? 0 : front.front().x.size();
  for (Eigen::Index j = 0; j < m; ++j) out << "f_" << j + 1 << ',';
  out << "g_norm,status,start_seed";
  for (Eigen::Index i = 0; i < n; ++i) out << ",x_" << i + 1;
  out << '\n';
  for (const auto& p : front) {
    if (p.f.size() != m || p.x.size() != n) throw InvalidInput("front rows differ in size");
    for (Eigen::Index j = 0; j < m; ++j) out << format_double(p.f[j]) << ',';
    out << format_double(p.g_norm) << ',' << to_string(p.status) << ',' << p.start_seed;
    for (Eigen::Index i = 0; i < n; ++i) out << ',' << format_double(p.x[i]);
    out << '\n';
  }
}

std::vector<FrontPoint> read_front_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!next_data_line(in, line, line_no)) throw ParseError(0, "front CSV: missing header");
  const auto header = split_csv(line);
  std::size_t m = 0;
  while (m < header.size() && header[m] == "f_" + std::to_string(m + 1)) ++m;
  if (header.size() < m + 3 || header[m] != "g_norm" || header[m + 1] != "status" ||
      header[m + 2] != "start_seed") {
    throw ParseError(line_no, "front CSV: unexpected header");
  }
  const std::size_t n = header.size() - m - 3;
  for (std::size_t i = 0; i < n; ++i) {
    if (header[m + 3 + i] != "x_" + std::to_string(i + 1))
      throw ParseError(line_no, "front CSV: unexpected column '" + header[m + 3 + i] + "'");
  }
  std::vector<FrontPoint> rows;
  while (next_data_line(in, line, line_no)) {
    const auto cells = split_csv(line);
    if (cells.size() != header.size())
      throw ParseError(line_no, "front CSV: expected " + std::to_string(header.size()) + " columns");
    FrontPoint p;
    p.f.resize(static_cast<Eigen::Index>(m));
    p.x.resize(static_cast<Eigen::Index>(n));
    for (std::size_t j = 0; j < m; ++j) p.f[j] = to_double(cells[j], line_no, header[j]);
    p.g_norm = to_double(cells[m], line_no, "g_norm");
    try {
      p.status = parse_run_status(cells[m + 1]);
    } catch (const InvalidInput& e) {
      throw ParseError(line_no, e.what());
    }
    p.start_seed = to_unsigned(cells[m + 2], line_no, "start_seed");
    for (std::size_t i = 0; i < n; ++i) p.x[i] = to_double(cells[m + 3 + i], line_no, header[m + 3 + i]);
    rows.push_back(std::move(p));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Profiles

std::vector<double> tau_grid() {
  std::vector<double> taus;
  for (int k = 0; k <= 180; ++k) taus.push_back(1.0 + k / 20.0);
  return taus;
}

std::vector<ProfileCurve> performance_profile(const std::vector<InstanceRow>& rows,
                                              ProfileMetric metric,
                                              const std::vector<double>& taus) {
  std::vector<std::string> solvers;
  std::map<std::pair<std::string, std::uint64_t>, std::map<std::string, double>> costs;
  for (const auto& r : rows) {
    if (std::find(solvers.begin(), solvers.end(), r.solver) == solvers.end())
      solvers.push_back(r.solver);
    double cost = kInf;
    if (r.status == RunStatus::converged) {
      cost = metric == ProfileMetric::outer_iterations ? static_cast<double>(r.outer_iters)
                                                       : static_cast<double>(r.f_evals + r.g_evals);
    }
    costs[{r.problem, r.seed}][r.solver] = cost;
  }
  std::vector<ProfileCurve> curves;
  if (costs.empty()) return curves;
  for (const auto& s : solvers) {
    std::vector<double> ratios;
    for (const auto& [instance, by_solver] : costs) {
      double best = kInf;
      for (const auto& [name, c] : by_solver) best = std::min(best, c);
      const auto it = by_solver.find(s);
      const double c = it == by_solver.end() ? kInf : it->second;
      if (!std::isfinite(c)) ratios.push_back(kInf);
      else if (best == 0.0) ratios.push_back(c == 0.0 ? 1.0 : kInf);
      else ratios.push_back(c / best);
    }
    ProfileCurve curve{s, {}};
    for (double tau : taus) {
      const auto hits = std::count_if(ratios.begin(), ratios.end(), [&](double r) { return r <= tau; });
      curve.rho.push_back(static_cast<double>(hits) / static_cast<double>(ratios.size()));
    }
    curves.push_back(std::move(curve));
  }
  return curves;
}

void write_instances_csv(std::ostream& out, const std::vector<InstanceRow>& rows) {
  out << "problem,seed,solver,status,outer_iters,f_evals,g_evals,wall_time\n";
  for (const auto& r : rows) {
    if (r.problem.find(',') != std::string::npos || r.solver.find(',') != std::string::npos)
      throw InvalidInput("names in CSV rows must not contain commas");
    out << r.problem << ',' << r.seed << ',' << r.solver << ',' << to_string(r.status) << ','
        << r.outer_iters << ',' << r.f_evals << ',' << r.g_evals << ','
        << format_double(r.wall_time) << '\n';
  }
}

std::vector<InstanceRow> read_instances_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!next_data_line(in, line, line_no)) throw ParseError(0, "instance CSV: missing header");
  if (split_csv(line) != std::vector<std::string>{"problem", "seed", "solver", "status",
                                                   "outer_iters", "f_evals", "g_evals",
                                                   "wall_time"}) {
    throw ParseError(line_no, "instance CSV: unexpected header");
  }
  std::vector<InstanceRow> rows;
  while (next_data_line(in, line, line_no)) {
    const auto c = split_csv(line);
    if (c.size() != 8) throw ParseError(line_no, "instance CSV: expected 8 columns");
    InstanceRow r;
    r.problem = c[0];
    r.seed = to_unsigned(c[1], line_no, "seed");
    r.solver = c[2];
    try {
      r.status = parse_run_status(c[3]);
    } catch (const InvalidInput& e) {
      throw ParseError(line_no, e.what());
    }
    r.outer_iters = static_cast<int>(to_integer(c[4], line_no, "outer_iters"));
    r.f_evals = to_integer(c[5], line_no, "f_evals");
    r.g_evals = to_integer(c[6], line_no, "g_evals");
    r.wall_time = to_double(c[7], line_no, "wall_time");
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_profile_csv(std::ostream& out, const std::vector<double>& taus,
                       const std::vector<ProfileCurve>& curves) {
  out << "tau";
  for (const auto& c : curves) out << ',' << c.solver;
  out << '\n';
  for (std::size_t k = 0; k < taus.size(); ++k) {
    out << format_double(taus[k]);
    for (const auto& c : curves) out << ',' << format_double(c.rho.at(k));
    out << '\n';
  }
}

std::vector<InstanceRow> run_campaign(const CampaignSpec& spec) {
  if (spec.problems.empty()) throw InvalidInput("campaign needs at least one problem");
  if (spec.starts_per_problem < 1) throw InvalidInput("starts_per_problem must be at least 1");
  if (spec.solvers.empty()) throw InvalidInput("campaign needs at least one solver");
  for (const auto& [name, config] : spec.solvers) {
    if (name.empty()) throw InvalidInput("solver names must be nonempty");
    config.validate();
  }

  std::vector<ProblemInstance> problems;
  for (const auto& name : spec.problems) problems.push_back(find_problem(name));

  struct Task {
    std::size_t problem;
    std::uint64_t seed;
    std::size_t solver;
  };
  std::vector<Task> tasks;
  for (std::size_t p = 0; p < problems.size(); ++p)
    for (int k = 0; k < spec.starts_per_problem; ++k)
      for (std::size_t s = 0; s < spec.solvers.size(); ++s)
        tasks.push_back({p, spec.seed + static_cast<std::uint64_t>(k), s});

  std::vector<InstanceRow> rows(tasks.size());
  StartOptions options;
  options.scale = spec.scale;
  parallel_for(static_cast<int>(tasks.size()), spec.jobs, [&](int k) {
    const Task& task = tasks[k];
    const ProblemInstance& problem = problems[task.problem];
    const Vector x0 = make_start(problem, random_eta(problem.n, task.seed));
    const RunOutcome o =
        single_run(problem, spec.solvers[task.solver].second, x0, options, task.seed);
    InstanceRow& r = rows[k];
    r.problem = problem.name;
    r.seed = task.seed;
    r.solver = spec.solvers[task.solver].first;
    r.wall_time = o.wall_time;
    if (!o.error.empty()) {
      r.status = RunStatus::evaluation_failure;
      return;
    }
    r.status = o.result.status;
    r.outer_iters = static_cast<int>(o.result.trace.size());
    r.f_evals = o.result.evals.f;
    r.g_evals = o.result.evals.g;
  });
  std::stable_sort(rows.begin(), rows.end(), [](const InstanceRow& a, const InstanceRow& b) {
    return std::tie(a.problem, a.seed, a.solver) < std::tie(b.problem, b.seed, b.solver);
  });
  return rows;
}

// ---------------------------------------------------------------------------
// Logistic study

LogisticStudy logistic_study(const LogisticDataset& data, const McrmConfig& config, int starts,
                             std::uint64_t seed, int jobs) {
  const ProblemInstance problem = logistic_objectives(data);
  StartOptions options;
  options.starts = starts;
  options.seed = seed;
  options.jobs = jobs;
  options.gamma = Vector((Vector(2) << 0.1, 1.0).finished());
  const auto outcomes = multi_start(problem, config, options);

  LogisticStudy study;
  study.runs = starts;
  study.converged = static_cast<int>(std::count_if(outcomes.begin(), outcomes.end(), [](const RunOutcome& o) {
    return o.error.empty() && o.result.status == RunStatus::converged;
  }));
  const auto front = dominance_filter(front_points(outcomes));
  for (const auto& p : front) {
    study.front.push_back(
        {p, accuracy(data, p.x, Split::train), accuracy(data, p.x, Split::test)});
  }
  if (!front.empty()) {
    study.min_f1 = 0;
    study.min_f2 = front.size() - 1;
    study.knee = knee_index(front);
  }
  return study;
}

void write_logistic_csv(std::ostream& out, const LogisticStudy& study) {
  const Eigen::Index n = study.front.empty() ? 0 : study.front.front().point.x.size();
  out << "f_1,f_2,g_norm,train_accuracy,test_accuracy,marker,start_seed";
  for (Eigen::Index i = 0; i < n; ++i) out << ",x_" << i + 1;
  out << '\n';
  for (std::size_t k = 0; k < study.front.size(); ++k) {
    const auto& lp = study.front[k];
    std::string marker;
    if (study.min_f1 == k) marker = "min_f1";
    else if (study.min_f2 == k) marker = "min_f2";
    else if (study.knee == k) marker = "knee";
    out << format_double(lp.point.f[0]) << ',' << format_double(lp.point.f[1]) << ','
        << format_double(lp.point.g_norm) << ',' << format_double(lp.train_accuracy) << ','
        << format_double(lp.test_accuracy) << ',' << marker << ',' << lp.point.start_seed;
    for (Eigen::Index i = 0; i < n; ++i) out << ',' << format_double(lp.point.x[i]);
    out << '\n';
  }
}

}  // namespace mcrm
