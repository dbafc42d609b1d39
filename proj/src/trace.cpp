#include "mcrm/trace.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <limits>
#include <ostream>
#include <sstream>

#include "json.hpp"

namespace mcrm {

namespace {

using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json array(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(number(v[i]));
  return out;
}

std::string theta_mode_name(ThetaMode mode) {
  return mode == ThetaMode::relative ? "relative" : "absolute";
}

std::string stop_name(StopKind kind) { return kind == StopKind::exact_grad ? "exact_grad" : "df_pair"; }

json config_json(const McrmConfig& c) {
  return {
      {"sigma1", c.sigma1},
      {"alpha", c.alpha},
      {"beta", c.beta},
      {"h_floor", c.h_floor},
      {"gradient_mode", to_string(c.mode.gradient)},
      {"hessian_mode", to_string(c.mode.hessian)},
      {"theta_mode", theta_mode_name(c.subsolver.theta_mode)},
      {"theta", c.subsolver.theta},
      {"tau", c.subsolver.tau},
      {"stop_rule", stop_name(c.stop.kind)},
      {"stop_threshold", c.stop.threshold},
      {"max_outer", c.max_outer},
      {"max_inner", c.max_inner},
  };
}

json record_json(const IterationRecord& r) {
  return {
      {"t", r.t},
      {"x", array(r.x)},
      {"sigma", number(r.sigma)},
      {"i_t", r.i_t},
      {"lambda", array(r.lambda.lambda)},
      {"f_values", array(r.f_values)},
      {"step_norm", number(r.step_norm)},
      {"g_norm", number(r.g_norm)},
      {"evals", {{"f", r.evals.f}, {"g", r.evals.g}, {"h", r.evals.h}}},
      {"model_sigma", number(r.model_sigma)},
      {"model_value", number(r.model_value)},
      {"residual", number(r.residual)},
      {"h_used", number(r.h_used)},
  };
}

// Schema errors name the record; JSON syntax errors carry the line.
class Reader {
 public:
  explicit Reader(std::string context) : context_(std::move(context)) {}

  const json& field(const json& obj, const char* key) const {
    if (!obj.is_object() || !obj.contains(key))
      throw ParseError(0, context_ + ": missing field '" + key + "'");
    return obj.at(key);
  }
  double real(const json& obj, const char* key) const {
    const json& v = field(obj, key);
    if (v.is_null()) return kNaN;
    if (!v.is_number()) throw ParseError(0, context_ + ": field '" + key + "' is not a number");
    return v.get<double>();
  }
  long long integer(const json& obj, const char* key) const {
    const json& v = field(obj, key);
    if (!v.is_number_integer())
      throw ParseError(0, context_ + ": field '" + key + "' is not an integer");
    return v.get<long long>();
  }
  std::string text(const json& obj, const char* key) const {
    const json& v = field(obj, key);
    if (!v.is_string()) throw ParseError(0, context_ + ": field '" + key + "' is not a string");
    return v.get<std::string>();
  }
  Vector vector(const json& obj, const char* key) const {
    const json& v = field(obj, key);
    if (!v.is_array()) throw ParseError(0, context_ + ": field '" + key + "' is not an array");
    Vector out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (v[i].is_null()) out[i] = kNaN;
      else if (v[i].is_number()) out[i] = v[i].get<double>();
      else throw ParseError(0, context_ + ": field '" + key + "' has a non-numeric entry");
    }
    return out;
  }

 private:
  std::string context_;
};

McrmConfig config_from(const json& j) {
  Reader r("meta.config");
  McrmConfig c;
  c.sigma1 = r.real(j, "sigma1");
  c.alpha = r.real(j, "alpha");
  c.beta = r.real(j, "beta");
  c.h_floor = r.real(j, "h_floor");
  try {
    c.mode.gradient = parse_gradient_mode(r.text(j, "gradient_mode"));
    c.mode.hessian = parse_hessian_mode(r.text(j, "hessian_mode"));
  } catch (const InvalidInput& e) {
    throw ParseError(0, std::string("meta.config: ") + e.what());
  }
  const std::string theta_mode = r.text(j, "theta_mode");
  if (theta_mode != "relative" && theta_mode != "absolute")
    throw ParseError(0, "meta.config: bad theta_mode '" + theta_mode + "'");
  c.subsolver.theta_mode = theta_mode == "relative" ? ThetaMode::relative : ThetaMode::absolute;
  c.subsolver.theta = r.real(j, "theta");
  c.subsolver.tau = r.real(j, "tau");
  const std::string stop = r.text(j, "stop_rule");
  if (stop != "exact_grad" && stop != "df_pair")
    throw ParseError(0, "meta.config: bad stop_rule '" + stop + "'");
  c.stop.kind = stop == "exact_grad" ? StopKind::exact_grad : StopKind::df_pair;
  c.stop.threshold = r.real(j, "stop_threshold");
  c.max_outer = static_cast<int>(r.integer(j, "max_outer"));
  c.max_inner = static_cast<int>(r.integer(j, "max_inner"));
  return c;
}

bool leq(double lhs, double rhs) { return lhs <= rhs + 1e-12 * std::abs(rhs) + 1e-300; }

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

CheckResult verdict(std::string name, bool ok, std::string detail, double lhs = 0.0,
                    double rhs = 0.0) {
  return {std::move(name), ok ? CheckStatus::pass : CheckStatus::fail, std::move(detail), lhs, rhs};
}

CheckResult skipped(std::string name, std::string why) {
  return {std::move(name), CheckStatus::skip, std::move(why), 0.0, 0.0};
}

}  // namespace

void write_trace_json(std::ostream& out, const RunTrace& trace) {
  json doc;
  doc["meta"] = {
      {"problem", trace.meta.problem},
      {"n", trace.meta.n},
      {"m", trace.meta.m},
      {"x0", array(trace.meta.x0)},
      {"status", to_string(trace.meta.status)},
      {"message", trace.meta.message},
      {"config", config_json(trace.meta.config)},
  };
  json records = json::array();
  for (const auto& r : trace.records) records.push_back(record_json(r));
  doc["records"] = std::move(records);
  out << doc.dump(1) << '\n';
}

void write_trace_csv(std::ostream& out, const RunTrace& trace) {
  out << "t,sigma,i_t,step_norm,g_norm";
  for (int j = 1; j <= trace.meta.m; ++j) out << ",f_" << j;
  out << ",evals_f,evals_g\n";
  out << std::setprecision(17);
  for (const auto& r : trace.records) {
    out << r.t << ',' << r.sigma << ',' << r.i_t << ',' << r.step_norm << ',' << r.g_norm;
    for (Eigen::Index j = 0; j < r.f_values.size(); ++j) out << ',' << r.f_values[j];
    out << ',' << r.evals.f << ',' << r.evals.g << '\n';
  }
}

RunTrace read_trace_json(std::istream& in) {
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t offset = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + static_cast<std::size_t>(
                              std::count(text.begin(), text.begin() + static_cast<long>(offset), '\n'));
    throw ParseError(line, std::string("malformed trace JSON: ") + e.what());
  }

  RunTrace trace;
  Reader meta("meta");
  const json& m = meta.field(doc, "meta");
  trace.meta.problem = meta.text(m, "problem");
  trace.meta.n = static_cast<int>(meta.integer(m, "n"));
  trace.meta.m = static_cast<int>(meta.integer(m, "m"));
  trace.meta.x0 = meta.vector(m, "x0");
  try {
    trace.meta.status = parse_run_status(meta.text(m, "status"));
  } catch (const InvalidInput& e) {
    throw ParseError(0, std::string("meta: ") + e.what());
  }
  if (m.contains("message") && m.at("message").is_string())
    trace.meta.message = m.at("message").get<std::string>();
  trace.meta.config = config_from(meta.field(m, "config"));

  const json& records = Reader("trace").field(doc, "records");
  if (!records.is_array()) throw ParseError(0, "trace: 'records' is not an array");
  for (std::size_t k = 0; k < records.size(); ++k) {
    Reader r("record " + std::to_string(k + 1));
    const json& j = records[k];
    IterationRecord rec;
    rec.t = static_cast<int>(r.integer(j, "t"));
    rec.x = r.vector(j, "x");
    rec.sigma = r.real(j, "sigma");
    rec.i_t = static_cast<int>(r.integer(j, "i_t"));
    rec.lambda.lambda = r.vector(j, "lambda");
    rec.f_values = r.vector(j, "f_values");
    rec.step_norm = r.real(j, "step_norm");
    rec.g_norm = r.real(j, "g_norm");
    const json& evals = r.field(j, "evals");
    rec.evals.f = r.integer(evals, "f");
    rec.evals.g = r.integer(evals, "g");
    rec.evals.h = r.integer(evals, "h");
    rec.model_sigma = r.real(j, "model_sigma");
    rec.model_value = r.real(j, "model_value");
    rec.residual = r.real(j, "residual");
    rec.h_used = r.real(j, "h_used");
    if (rec.x.size() != trace.meta.n || rec.f_values.size() != trace.meta.m ||
        rec.lambda.lambda.size() != trace.meta.m) {
      throw ParseError(0, "record " + std::to_string(k + 1) + ": vector sizes do not match n, m");
    }
    trace.records.push_back(std::move(rec));
  }
  return trace;
}

RunTrace read_trace_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open trace '" + path + "'");
  return read_trace_json(in);
}

std::string to_string(CheckStatus status) {
  switch (status) {
    case CheckStatus::pass: return "pass";
    case CheckStatus::fail: return "fail";
    case CheckStatus::skip: return "skip";
  }
  return "?";
}

bool TraceReport::passed() const {
  return std::none_of(checks.begin(), checks.end(),
                      [](const CheckResult& c) { return c.status == CheckStatus::fail; });
}

const CheckResult* TraceReport::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

long long evaluations_per_inner_iteration(const McrmConfig& config, int n, int m) {
  const auto b = bundle_budget(config.mode, n);
  return static_cast<long long>(m) * (1 + b.values + b.gradients);
}

TraceReport verify_trace(const RunTrace& trace, const VerifyInputs& inputs) {
  TraceReport report;
  const auto& recs = trace.records;
  const McrmConfig& cfg = trace.meta.config;
  const double sigma1 = cfg.sigma1;
  const double alpha = cfg.alpha;
  const int T = static_cast<int>(recs.size());
  const int m = trace.meta.m;

  // sigma lower bound and update identity.
  {
    bool ok = true;
    std::string detail = "sigma_t >= sigma1 on all " + std::to_string(T) + " records";
    for (const auto& r : recs) {
      if (!(r.sigma >= sigma1)) {
        ok = false;
        detail = "record " + std::to_string(r.t) + ": sigma " + fmt(r.sigma) + " < sigma1";
        break;
      }
    }
    report.checks.push_back(verdict("sigma_lower", ok, detail));
  }
  {
    bool ok = true;
    std::string detail = "sigma_{t+1} = alpha^(i_t - 1) sigma_t on every accepted step";
    for (int k = 0; k + 1 < T; ++k) {
      if (recs[k].i_t < 0 || recs[k + 1].sigma != next_sigma(recs[k].sigma, alpha, recs[k].i_t)) {
        ok = false;
        detail = "record " + std::to_string(recs[k + 1].t) + ": sigma " + fmt(recs[k + 1].sigma) +
                 " does not follow from record " + std::to_string(recs[k].t);
        break;
      }
    }
    report.checks.push_back(verdict("sigma_update", ok, detail));
  }

  std::optional<double> kG = inputs.kappa_G, kH = inputs.kappa_H;
  if (inputs.lipschitz) {
    const auto factors = kappa_factors(cfg.mode, cfg.beta, trace.meta.n);
    if (!kG) kG = *inputs.lipschitz * factors.gradient;
    if (!kH) kH = *inputs.lipschitz * factors.hessian;
  }
  std::optional<double> sigma_max;
  if (inputs.lipschitz && kG && kH)
    sigma_max = sigma1 + 2.0 * (*inputs.lipschitz + 3.0 * alpha * (2.0 * *kG + *kH));

  if (sigma_max) {
    double worst = 0.0;
    for (const auto& r : recs) worst = std::max(worst, r.sigma);
    report.checks.push_back(verdict("sigma_upper", leq(worst, *sigma_max),
                                    "max sigma_t " + fmt(worst) + " vs sigma_max " +
                                        fmt(*sigma_max),
                                    worst, *sigma_max));
  } else {
    report.checks.push_back(skipped("sigma_upper", "needs the Lipschitz constant L"));
  }

  // Accepted-step line search, weights, subproblem certificates.
  {
    bool ok = true;
    std::string detail = "every accepted step satisfies the line-search inequality";
    for (int k = 0; k + 1 < T; ++k) {
      const auto& a = recs[k];
      const auto& b = recs[k + 1];
      bool accept = false;
      try {
        accept = a.i_t >= 0 && line_search_accept(a.f_values, b.f_values, a.sigma, alpha, a.i_t,
                                                  b.step_norm, a.step_norm);
      } catch (const Error&) {
        accept = false;
      }
      if (!accept) {
        ok = false;
        detail = "step " + std::to_string(a.t) + " -> " + std::to_string(b.t) + " fails";
        break;
      }
    }
    report.checks.push_back(verdict("line_search", ok, detail));
  }
  {
    bool ok = true;
    std::string detail = "all weights lie in the unit simplex";
    for (const auto& r : recs) {
      if (!r.lambda.valid(1e-12)) {
        ok = false;
        detail = "record " + std::to_string(r.t) + ": weights leave the simplex";
        break;
      }
    }
    report.checks.push_back(verdict("simplex_weights", ok, detail));
  }
  {
    bool ok = true;
    std::string detail = "every accepted step has model value <= 0 and a certified residual";
    for (int k = 0; k + 1 < T; ++k) {
      const auto& a = recs[k];
      const double bound = cfg.subsolver.residual_bound(recs[k + 1].step_norm);
      if (!(a.model_value <= 1e-12) || !(a.residual <= bound)) {
        ok = false;
        detail = "step from record " + std::to_string(a.t) + ": model value " +
                 fmt(a.model_value) + ", residual " + fmt(a.residual) + " (bound " + fmt(bound) +
                 ")";
        break;
      }
    }
    report.checks.push_back(verdict("subproblem_certificate", ok, detail));
  }

  // Complexity bounds.
  std::optional<double> delta1;
  if (inputs.f_lower && T >= 1) {
    if (inputs.f_lower->size() != m) throw InvalidInput("f_lower must have one entry per objective");
    double gap = std::numeric_limits<double>::infinity();
    for (int j = 0; j < m; ++j) gap = std::min(gap, recs[0].f_values[j] - (*inputs.f_lower)[j]);
    const double s1 = recs[0].step_norm;
    delta1 = 24.0 * gap / ((alpha - 1.0) * sigma1) + (alpha + 1.0) / (alpha - 1.0) * s1 * s1 * s1;
  }
  double theta = cfg.subsolver.theta;
  if (cfg.subsolver.theta_mode == ThetaMode::absolute) {
    theta = 0.0;
    for (int k = 0; k + 1 < T; ++k) {
      const double s = recs[k + 1].step_norm;
      const double r = recs[k].residual;
      theta = std::max(theta, r == 0.0 ? 0.0 : r / (s * s));
    }
  }
  std::optional<double> delta0;
  if (sigma_max) {
    delta0 = std::pow(
        (*inputs.lipschitz + 2.0 * theta + (*sigma_max + 2.0 * *kG + 2.0 * *kH) * alpha) / 2.0, 1.5);
  }

  if (delta1) {
    double sum = 0.0;
    for (int k = 0; k + 1 < T; ++k) sum += std::pow(recs[k].step_norm, 3);
    report.checks.push_back(verdict("step_sum", leq(sum, *delta1),
                                    "sum ||x_t - x_{t-1}||^3 = " + fmt(sum) + " vs Delta1 " +
                                        fmt(*delta1),
                                    sum, *delta1));
  } else {
    report.checks.push_back(skipped("step_sum", "needs lower bounds F*_j"));
  }

  if (delta0 && delta1) {
    double sum = 0.0;
    double best = std::numeric_limits<double>::infinity();
    for (int k = 1; k < T; ++k) {
      sum += std::pow(recs[k].g_norm, 1.5);
      best = std::min(best, recs[k].g_norm);
    }
    const double bound = *delta0 * *delta1;
    report.checks.push_back(verdict("gradient_sum", leq(sum, bound),
                                    "sum g_t^(3/2) = " + fmt(sum) + " vs Delta0*Delta1 " +
                                        fmt(bound),
                                    sum, bound));
    if (T >= 2) {
      const double rate = std::pow(bound / (T - 1), 2.0 / 3.0);
      report.checks.push_back(verdict("min_gradient", leq(best, rate),
                                      "min g_t = " + fmt(best) + " vs " + fmt(rate), best, rate));
    } else {
      report.checks.push_back(verdict("min_gradient", true, "fewer than two records"));
    }
  } else {
    report.checks.push_back(skipped("gradient_sum", "needs L and lower bounds F*_j"));
    report.checks.push_back(skipped("min_gradient", "needs L and lower bounds F*_j"));
  }

  // Telescoped line-search inequalities.
  if (T >= 2) {
    double rhs = 0.0;
    double magnitude = 0.0;
    for (int k = 1; k < T; ++k) {
      const double term = (alpha - 1.0) * sigma1 / 12.0 * std::pow(recs[k].step_norm, 3);
      rhs += term;
      magnitude += term;
    }
    const double last = recs[T - 1].sigma / 12.0 * std::pow(recs[T - 1].step_norm, 3);
    const double first = sigma1 / 12.0 * std::pow(recs[0].step_norm, 3);
    rhs += last - first;
    magnitude += last + first;
    bool ok = true;
    double worst_lhs = std::numeric_limits<double>::infinity();
    for (int j = 0; j < m; ++j) {
      const double lhs = recs[0].f_values[j] - recs[T - 1].f_values[j];
      const double scale = magnitude + std::abs(recs[0].f_values[j]) + std::abs(recs[T - 1].f_values[j]);
      worst_lhs = std::min(worst_lhs, lhs);
      if (!(lhs >= rhs - 1e-12 * scale)) ok = false;
    }
    report.checks.push_back(verdict("telescoping", ok,
                                    "min_j F_j(x_1) - F_j(x_T) = " + fmt(worst_lhs) + " vs " +
                                        fmt(rhs),
                                    worst_lhs, rhs));
  } else {
    report.checks.push_back(verdict("telescoping", true, "fewer than two records"));
  }

  // Evaluation count.
  if (T >= 1) {
    const long long delta = evaluations_per_inner_iteration(cfg, trace.meta.n, m);
    long long inner = 0;
    for (int k = 0; k + 1 < T; ++k) inner += recs[k].i_t + 1;
    const long long used = recs[T - 1].evals.values_and_gradients() -
                           recs[0].evals.values_and_gradients();
    const double bound = static_cast<double>(delta) * static_cast<double>(inner);
    report.checks.push_back(verdict(
        "evaluation_count", static_cast<double>(used) <= bound,
        "evaluations after record 1: " + std::to_string(used) + " vs delta * sum(i_t + 1) = " +
            std::to_string(delta) + " * " + std::to_string(inner),
        static_cast<double>(used), bound));
  }

  for (int k = 0; k + 1 < T; ++k) {
    const double g = recs[k].g_norm;
    report.rate_table.push_back(g > 0.0 ? recs[k + 1].g_norm / (g * g) : kNaN);
  }
  return report;
}

void write_report_json(std::ostream& out, const TraceReport& report) {
  json doc;
  json checks = json::array();
  for (const auto& c : report.checks) {
    checks.push_back({{"name", c.name},
                      {"status", to_string(c.status)},
                      {"detail", c.detail},
                      {"lhs", number(c.lhs)},
                      {"rhs", number(c.rhs)}});
  }
  doc["checks"] = std::move(checks);
  json rates = json::array();
  for (double r : report.rate_table) rates.push_back(number(r));
  doc["rate_table"] = std::move(rates);
  doc["passed"] = report.passed();
  out << doc.dump(1) << '\n';
}

void write_report_text(std::ostream& out, const TraceReport& report) {
  for (const auto& c : report.checks) {
    out << std::left << std::setw(24) << c.name << ' ' << std::setw(5) << to_string(c.status) << ' '
        << c.detail << '\n';
  }
}

}  // namespace mcrm
