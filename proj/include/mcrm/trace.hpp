#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mcrm/driver.hpp"

namespace mcrm {

struct RunTrace {
  TraceMeta meta;
  std::vector<IterationRecord> records;

  static RunTrace from(const RunResult& result) { return {result.meta, result.trace}; }
};

void write_trace_json(std::ostream& out, const RunTrace& trace);
void write_trace_csv(std::ostream& out, const RunTrace& trace);

/// Parses the JSON written by write_trace_json. Throws ParseError.
RunTrace read_trace_json(std::istream& in);
RunTrace read_trace_json_file(const std::string& path);

struct VerifyInputs {
  std::optional<double> lipschitz;            // L, Lipschitz constant of the Hessians
  std::optional<double> kappa_G;              // error coefficients; derived from L when absent
  std::optional<double> kappa_H;
  std::optional<Vector> f_lower;              // lower bounds F*_j
};

enum class CheckStatus { pass, fail, skip };
std::string to_string(CheckStatus status);

struct CheckResult {
  std::string name;
  CheckStatus status = CheckStatus::skip;
  std::string detail;
  double lhs = 0.0;
  double rhs = 0.0;
};

struct TraceReport {
  std::vector<CheckResult> checks;
  std::vector<double> rate_table;  // g_{t+1} / g_t^2

  bool passed() const;  // no check failed
  const CheckResult* find(const std::string& name) const;
};

/// Re-checks the stored run against the bounds the method guarantees.
/// Checks whose inputs are missing are reported as skipped.
TraceReport verify_trace(const RunTrace& trace, const VerifyInputs& inputs = {});

void write_report_json(std::ostream& out, const TraceReport& report);
void write_report_text(std::ostream& out, const TraceReport& report);

/// Evaluations of F_j and grad F_j per inner iteration: m trial values plus
/// one bundle.
long long evaluations_per_inner_iteration(const McrmConfig& config, int n, int m);

}  // namespace mcrm
