#pragma once

// Scenario files and run reports for the contactlab tool.
//
// A scenario is a JSON object {kind, seed, params, name?, description?}.
// Every parameter has a default; unknown keys are rejected. Reports are
// deterministic given the scenario (no timing, sorted keys).

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

namespace contactlab {

struct Scenario {
  std::string name;
  std::string kind;
  std::uint64_t seed = 0;
  nlohmann::json params = nlohmann::json::object();
};

struct Verdict {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double tolerance = 0.0;
  std::string detail;
  long index = -1;  // offending sample, −1 if none
};

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

struct Report {
  std::string name;
  std::string kind;
  std::uint64_t seed = 0;
  nlohmann::json params;  // effective parameters, defaults filled in
  std::map<std::string, double> scalars;
  std::map<std::string, Table> tables;
  std::vector<Verdict> verdicts;
  std::string error;  // numerical failure, empty otherwise

  bool passed() const;
  nlohmann::json to_json() const;
  static Report from_json(const nlohmann::json& j);
};

/// Names of the supported scenario kinds.
const std::vector<std::string>& scenario_kinds();

/// Throws ConfigError on a malformed scenario.
Scenario parse_scenario(const nlohmann::json& j, const std::string& fallback_name);
/// Throws IoError if unreadable, ConfigError if malformed.
Scenario load_scenario(const std::string& path);

/// Runs the scenario. Bad parameters throw ConfigError; numerical failures
/// are caught and recorded as a failing report.
Report run_scenario(const Scenario& s);

/// 0 if every verdict passes, 1 otherwise.
int exit_code(const Report& r);

std::string report_json(const Report& r);
/// File suffix → CSV text: "scalars", "verdicts" and one per table.
std::map<std::string, std::string> report_csv(const Report& r);

/// Writes <dir>/<name>.json or <dir>/<name>.<suffix>.csv. Throws IoError.
void write_report(const Report& r, const std::string& dir, const std::string& format);

}  // namespace contactlab
