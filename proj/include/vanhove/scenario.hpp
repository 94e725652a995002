#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vanhove/io.hpp"
#include "vanhove/phasespace.hpp"

namespace vanhove {

/// A parsed configuration file:
///
///   [scenario]
///   kind = "qubit_measurement"
///   [grid]
///   q = [-3, 3, 512]
///   [params]
///   w_plus = 0.7
///
/// Each value is JSON. Lines starting with '#' or ';' are comments.
struct Scenario {
  std::string name;
  std::string kind;
  std::string description;
  std::uint64_t seed = 0;
  nlohmann::json grid = nlohmann::json::object();
  PhysicalConstants constants;
  nlohmann::json params = nlohmann::json::object();
  std::filesystem::path source;
};

const std::vector<std::string>& scenario_kinds();

// Throws ParseError on malformed text, missing sections or unknown kinds.
Scenario parse_scenario(const std::string& text, const std::filesystem::path& source = {});
Scenario load_scenario(const std::filesystem::path& path);

struct RunOptions {
  std::filesystem::path out_root = "vanhove-out";
  double grid_scale = 1.0;
  OutputFormat format = OutputFormat::both;
};

struct CheckResult {
  std::string name;
  bool pass = false;
  double value = 0.0;
  std::string criterion;  // e.g. "< 1e-3"
};

struct ScenarioOutcome {
  std::string name;
  int exit_code = 0;  // 0 all checks pass, 1 a check failed, 2 parse, 3 precondition, 4 numerical
  std::vector<CheckResult> checks;
  std::vector<std::filesystem::path> artifacts;
  std::string error;
};

// Runs one scenario, writing artifacts under out_root/<name>/ and one
// "PASS|FAIL <scenario>.<check> ..." line per check to `log`.
ScenarioOutcome run_scenario(const Scenario& scenario, const RunOptions& options, std::ostream& log);
// Parses `path` first; parse failures give exit code 2.
ScenarioOutcome run_scenario_file(const std::filesystem::path& path, const RunOptions& options,
                                  std::ostream& log);

struct CatalogEntry {
  std::string name;
  std::string kind;
  std::string description;
  std::filesystem::path path;
};

std::filesystem::path default_scenario_dir();
// Every *.cfg in `dir`, sorted by file name.
std::vector<CatalogEntry> list_scenarios(const std::filesystem::path& dir = default_scenario_dir());

}  // namespace vanhove
