#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "wfelab/config.hpp"

namespace wfelab {

struct CheckResult {
  enum class Relation { below, above, measurement };

  std::string name;
  double value = 0.0;
  /// Threshold the value is compared against (unused for measurements).
  double tolerance = 0.0;
  Relation relation = Relation::below;
  bool passed = true;
};

struct ScenarioResult {
  std::string scenario;
  std::string label;
  std::vector<CheckResult> checks;
  std::map<std::string, double> final_values;
  /// Set when the run aborted; names the violated invariant or config key.
  std::string error;
  int exit_code = 0;
  double wall_time_seconds = 0.0;

  bool passed() const { return exit_code == 0; }
  std::vector<std::string> failed_checks() const;
};

/// Runs one scenario, writing timeseries.csv, summary.json and fields/*.csv
/// under `out_dir`. Exit codes: 0 all checks pass, 1 a check failed or an
/// invariant monitor aborted the run, 2 invalid configuration.
ScenarioResult run_scenario(const ScenarioConfig& config, const std::filesystem::path& out_dir);

/// Loads, overrides and runs a config file; config errors become exit code 2.
/// The output directory is `out_dir` if given, else run.output_dir, else
/// "out/<scenario>".
ScenarioResult run_config_file(const std::filesystem::path& path, const std::filesystem::path& out_dir,
                               const std::vector<std::string>& overrides);

struct VerifyReport {
  std::vector<ScenarioResult> results;
  double wall_time_seconds = 0.0;
  /// Largest exit code over all scenarios (0 for an empty suite).
  int exit_code = 0;
};

/// Runs every *.ini in `suite_dir` (sorted by name) with outputs under
/// out_dir/<config stem>, and writes out_dir/report.json.
VerifyReport verify_all(const std::filesystem::path& suite_dir, const std::filesystem::path& out_dir);

/// "%.17g" formatting used for every CSV number.
std::string format_csv_number(double v);

}  // namespace wfelab
