#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace wfelab {

/// Invalid configuration text or value (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Scenario {
  free,
  harmonic,
  cat,
  wfe_equivalence,
  greens_verify,
  third_order_verify,
  fd_verify,
  nogo_verify,
  dropout_verify,
  n2_scaling,
};

std::string to_string(Scenario s);
Scenario parse_scenario(const std::string& name);

struct GridSpec {
  std::size_t n = 128;
  double x_min = -16.0;
  double x_max = 16.0;
  bool periodic = true;
};

struct PhysicsSpec {
  std::size_t n_particles = 1;
  double w = 0.0;
  double sigma = 1.0;
  double separation = 10.0;
  double momentum = 0.0;
  double center = 0.0;
  /// "none" or "harmonic:<omega>".
  std::string potential = "none";
  std::vector<std::size_t> n_values{2, 4, 8, 16, 32};
  std::size_t samples = 20;
};

struct IntegrationSpec {
  double dt = 1e-3;
  double t_final = 0.0;
  std::size_t record_every = 100;
  /// "split" or "reference".
  std::string integrator = "split";
};

/// Parsed, validated configuration. Unknown sections or keys are rejected.
///
/// Text format: `[section]` headers, `key = value` lines, `#` or `;`
/// comments. Sections: run, grid, physics, integration, output, tolerance.
struct ScenarioConfig {
  Scenario scenario = Scenario::free;
  std::uint64_t seed = 12345;
  std::string output_dir;
  GridSpec grid;
  PhysicsSpec physics;
  IntegrationSpec integration;
  bool write_fields = true;
  std::map<std::string, double> tolerances;

  /// Tolerance by name; throws ConfigError for unknown names.
  double tolerance(const std::string& name) const;
  /// harmonic frequency, or 0 for "none".
  double harmonic_omega() const;
  /// Every key with its effective value, as "section.key" -> text.
  std::map<std::string, std::string> flattened() const;
};

/// Default value of every tolerance.* key.
const std::map<std::string, double>& default_tolerances();

/// Raw key/value pairs, keyed "section.key", in file order of first appearance.
using RawConfig = std::map<std::string, std::string>;

RawConfig parse_config_text(const std::string& text);
RawConfig read_config_file(const std::filesystem::path& path);

/// Applies "key=value" overrides; key may be "section.key" or a bare key that
/// names exactly one known entry.
void apply_overrides(RawConfig& raw, const std::vector<std::string>& overrides);

ScenarioConfig build_config(const RawConfig& raw);

ScenarioConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

}  // namespace wfelab
