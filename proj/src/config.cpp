#include "wfelab/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace wfelab {

namespace {

constexpr const char* kScenarioNames[] = {
    "free",        "harmonic",    "cat",          "wfe-equivalence", "greens-verify",
    "third-order-verify", "fd-verify", "nogo-verify", "dropout-verify", "n2-scaling",
};

const std::set<std::string>& plain_keys() {
  static const std::set<std::string> keys = {
      "run.scenario",      "run.seed",          "run.output_dir",   "grid.n",
      "grid.x_min",        "grid.x_max",        "grid.periodic",    "physics.N",
      "physics.w",         "physics.sigma",     "physics.separation", "physics.momentum",
      "physics.center",    "physics.potential", "physics.n_values", "physics.samples",
      "integration.dt",    "integration.t_final", "integration.record_every", "integration.integrator",
      "output.fields",
  };
  return keys;
}

bool is_known_key(const std::string& key) {
  if (plain_keys().count(key)) return true;
  if (key.rfind("tolerance.", 0) == 0) return default_tolerances().count(key.substr(10)) > 0;
  return false;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_real(const std::string& key, const std::string& text) {
  double v = 0.0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw ConfigError(key + ": expected a finite number, got '" + text + "'");
  }
  return v;
}

std::uint64_t parse_unsigned(const std::string& key, const std::string& text) {
  std::uint64_t v = 0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) throw ConfigError(key + ": expected a non-negative integer, got '" + text + "'");
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + text + "'");
}

void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ConfigError(key + ": " + what);
}

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string to_string(Scenario s) { return kScenarioNames[static_cast<int>(s)]; }

Scenario parse_scenario(const std::string& name) {
  for (int i = 0; i < 10; ++i) {
    if (name == kScenarioNames[i]) return static_cast<Scenario>(i);
  }
  throw ConfigError("run.scenario: unknown scenario '" + name + "'");
}

const std::map<std::string, double>& default_tolerances() {
  static const std::map<std::string, double> t = {
      {"norm", 1e-9},
      {"energy", 1e-6},
      {"spreading", 1e-4},
      {"stationarity", 1e-8},
      {"integrator_agreement", 1e-5},
      {"wfe_agreement", 1e-8},
      {"cat_dispersion", 1e-2},
      {"greens_identity", 1e-8},
      {"poisson_residual", 1e-4},
      {"boundary", 1e-6},
      {"lagrangian", 1e-6},
      {"kernel_gap", 0.1},
      {"third_order_residual", 1e-3},
      {"quadratic_energy", 1e-6},
      {"linearity", 1e-10},
      {"fd_eigen", 1e-3},
      {"fd_order2", 1e-4},
      {"fd_transpose", 1e-4},
      {"fd_mirror", 1e-12},
      {"refutation", 0.1},
      {"moment_output", 1e-8},
      {"moment_density", 0.1},
      {"antisymmetry", 1e-8},
      {"dropout_gradient", 1e-12},
      {"dropout_fd", 1e-8},
      {"slope", 0.05},
  };
  return t;
}

double ScenarioConfig::tolerance(const std::string& name) const {
  const auto it = tolerances.find(name);
  if (it == tolerances.end()) throw ConfigError("unknown tolerance '" + name + "'");
  return it->second;
}

double ScenarioConfig::harmonic_omega() const {
  if (physics.potential == "none") return 0.0;
  return parse_real("physics.potential", physics.potential.substr(std::string("harmonic:").size()));
}

std::map<std::string, std::string> ScenarioConfig::flattened() const {
  std::map<std::string, std::string> m;
  m["run.scenario"] = to_string(scenario);
  m["run.seed"] = std::to_string(seed);
  m["run.output_dir"] = output_dir;
  m["grid.n"] = std::to_string(grid.n);
  m["grid.x_min"] = format_real(grid.x_min);
  m["grid.x_max"] = format_real(grid.x_max);
  m["grid.periodic"] = grid.periodic ? "true" : "false";
  m["physics.N"] = std::to_string(physics.n_particles);
  m["physics.w"] = format_real(physics.w);
  m["physics.sigma"] = format_real(physics.sigma);
  m["physics.separation"] = format_real(physics.separation);
  m["physics.momentum"] = format_real(physics.momentum);
  m["physics.center"] = format_real(physics.center);
  m["physics.potential"] = physics.potential;
  std::string nv;
  for (std::size_t i = 0; i < physics.n_values.size(); ++i) {
    nv += (i ? "," : "") + std::to_string(physics.n_values[i]);
  }
  m["physics.n_values"] = nv;
  m["physics.samples"] = std::to_string(physics.samples);
  m["integration.dt"] = format_real(integration.dt);
  m["integration.t_final"] = format_real(integration.t_final);
  m["integration.record_every"] = std::to_string(integration.record_every);
  m["integration.integrator"] = integration.integrator;
  m["output.fields"] = write_fields ? "true" : "false";
  for (const auto& [k, v] : tolerances) m["tolerance." + k] = format_real(v);
  return m;
}

RawConfig parse_config_text(const std::string& text) {
  RawConfig raw;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto cut = line.find_first_of("#;");
    if (cut != std::string::npos) line.erase(cut);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no);
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      static const std::set<std::string> sections = {"run", "grid", "physics", "integration", "output", "tolerance"};
      if (!sections.count(section)) throw ConfigError(where + ": unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    if (section.empty()) throw ConfigError(where + ": key outside of any section");
    const std::string key = section + "." + trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!is_known_key(key)) throw ConfigError(where + ": unknown key '" + key + "'");
    if (raw.count(key)) throw ConfigError(where + ": duplicate key '" + key + "'");
    raw[key] = value;
  }
  return raw;
}

RawConfig read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

void apply_overrides(RawConfig& raw, const std::vector<std::string>& overrides) {
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + o + "'");
    std::string key = trim(o.substr(0, eq));
    const std::string value = trim(o.substr(eq + 1));
    if (key.find('.') == std::string::npos) {
      std::vector<std::string> matches;
      for (const auto& k : plain_keys()) {
        if (k.substr(k.find('.') + 1) == key) matches.push_back(k);
      }
      if (default_tolerances().count(key)) matches.push_back("tolerance." + key);
      if (matches.size() != 1) throw ConfigError("--set: key '" + key + "' is unknown or ambiguous");
      key = matches.front();
    }
    if (!is_known_key(key)) throw ConfigError("--set: unknown key '" + key + "'");
    raw[key] = value;
  }
}

ScenarioConfig build_config(const RawConfig& raw) {
  ScenarioConfig c;
  c.tolerances = default_tolerances();
  auto get = [&](const std::string& key) -> const std::string* {
    const auto it = raw.find(key);
    return it == raw.end() ? nullptr : &it->second;
  };
  const std::string* scen = get("run.scenario");
  if (!scen) throw ConfigError("run.scenario is required");
  c.scenario = parse_scenario(*scen);
  if (auto v = get("run.seed")) c.seed = parse_unsigned("run.seed", *v);
  if (auto v = get("run.output_dir")) c.output_dir = *v;

  if (auto v = get("grid.n")) c.grid.n = parse_unsigned("grid.n", *v);
  if (auto v = get("grid.x_min")) c.grid.x_min = parse_real("grid.x_min", *v);
  if (auto v = get("grid.x_max")) c.grid.x_max = parse_real("grid.x_max", *v);
  if (auto v = get("grid.periodic")) c.grid.periodic = parse_bool("grid.periodic", *v);
  require(c.grid.n >= 8 && c.grid.n <= 65536, "grid.n", "must lie in [8, 65536]");
  require(c.grid.x_max > c.grid.x_min, "grid.x_max", "must exceed grid.x_min");

  if (auto v = get("physics.N")) c.physics.n_particles = parse_unsigned("physics.N", *v);
  if (auto v = get("physics.w")) c.physics.w = parse_real("physics.w", *v);
  if (auto v = get("physics.sigma")) c.physics.sigma = parse_real("physics.sigma", *v);
  if (auto v = get("physics.separation")) c.physics.separation = parse_real("physics.separation", *v);
  if (auto v = get("physics.momentum")) c.physics.momentum = parse_real("physics.momentum", *v);
  if (auto v = get("physics.center")) c.physics.center = parse_real("physics.center", *v);
  if (auto v = get("physics.potential")) c.physics.potential = *v;
  if (auto v = get("physics.samples")) c.physics.samples = parse_unsigned("physics.samples", *v);
  if (auto v = get("physics.n_values")) {
    c.physics.n_values.clear();
    std::istringstream ss(*v);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto n = parse_unsigned("physics.n_values", trim(item));
      require(n >= 1, "physics.n_values", "entries must be positive");
      c.physics.n_values.push_back(n);
    }
    require(c.physics.n_values.size() >= 2, "physics.n_values", "needs at least two entries");
  }
  require(c.physics.n_particles >= 1 && c.physics.n_particles <= 100000, "physics.N", "must lie in [1, 100000]");
  require(c.physics.w >= 0.0, "physics.w", "must be non-negative");
  require(c.physics.sigma > 0.0, "physics.sigma", "must be positive");
  require(c.physics.separation >= 0.0, "physics.separation", "must be non-negative");
  require(c.physics.samples >= 1, "physics.samples", "must be positive");
  if (c.physics.potential != "none") {
    require(c.physics.potential.rfind("harmonic:", 0) == 0, "physics.potential", "expected none or harmonic:<omega>");
    require(c.harmonic_omega() > 0.0, "physics.potential", "harmonic frequency must be positive");
  }

  if (auto v = get("integration.dt")) c.integration.dt = parse_real("integration.dt", *v);
  if (auto v = get("integration.t_final")) c.integration.t_final = parse_real("integration.t_final", *v);
  if (auto v = get("integration.record_every")) {
    c.integration.record_every = parse_unsigned("integration.record_every", *v);
  }
  if (auto v = get("integration.integrator")) c.integration.integrator = *v;
  require(c.integration.dt > 0.0, "integration.dt", "must be positive");
  require(c.integration.t_final >= 0.0, "integration.t_final", "must be non-negative");
  require(c.integration.record_every >= 1, "integration.record_every", "must be positive");
  require(c.integration.integrator == "split" || c.integration.integrator == "reference", "integration.integrator",
          "expected split or reference");

  if (auto v = get("output.fields")) c.write_fields = parse_bool("output.fields", *v);

  for (const auto& [key, value] : raw) {
    if (key.rfind("tolerance.", 0) != 0) continue;
    const double t = parse_real(key, value);
    require(t > 0.0, key, "must be positive");
    c.tolerances[key.substr(10)] = t;
  }
  return c;
}

ScenarioConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  RawConfig raw = read_config_file(path);
  apply_overrides(raw, overrides);
  return build_config(raw);
}

}  // namespace wfelab
