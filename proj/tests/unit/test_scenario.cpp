#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <doctest.h>
#include <json.hpp>

#include "wfelab/scenario.hpp"

using namespace wfelab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("wfelab_test_scenario_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

int run_cli(const std::string& args) {
  const int status = std::system((std::string(WFELAB_CLI) + " " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const fs::path kConfigs = fs::path(WFELAB_SOURCE_DIR) / "configs";

const char* kSmallFree = R"([run]
scenario = free
[grid]
n = 128
x_min = -20
x_max = 20
[physics]
sigma = 1
[integration]
dt = 1e-3
t_final = 0.2
record_every = 50
)";

}  // namespace

TEST_CASE("format of CSV numbers") {
  CHECK(format_csv_number(0.1) == "0.10000000000000001");
  CHECK(format_csv_number(1.0) == "1");
  CHECK(format_csv_number(-2.5e-300) == "-2.5e-300");
}

TEST_CASE("run writes the documented outputs") {
  const auto dir = scratch("outputs");
  write(dir / "free.ini", kSmallFree);
  const auto r = run_config_file(dir / "free.ini", dir / "out", {});
  CHECK(r.exit_code == 0);
  CHECK(r.error.empty());
  CHECK(fs::exists(dir / "out" / "timeseries.csv"));
  CHECK(fs::exists(dir / "out" / "summary.json"));
  CHECK(fs::is_directory(dir / "out" / "fields"));
  CHECK_FALSE(fs::is_empty(dir / "out" / "fields"));

  std::ifstream ts(dir / "out" / "timeseries.csv");
  std::string header;
  std::getline(ts, header);
  CHECK(header == "t,norm,energy_kinetic,energy_potential,wfe,energy_total,com_mean,com_dispersion");
  std::size_t rows = 0;
  for (std::string line; std::getline(ts, line);) ++rows;
  CHECK(rows == 5);  // t = 0, 0.05, ..., 0.2

  const auto j = nlohmann::json::parse(slurp(dir / "out" / "summary.json"));
  CHECK(j["scenario"] == "free");
  CHECK(j["passed"] == true);
  CHECK(j["exit_code"] == 0);
  CHECK(j["error"].is_null());
  CHECK(j["final"].contains("norm"));
  CHECK(j["tolerances"]["norm"] == 1e-9);
  CHECK(j["wall_time_seconds"].get<double>() >= 0.0);
  CHECK(std::stod(j["config"]["integration.t_final"].get<std::string>()) == 0.2);
  for (const auto& c : j["checks"]) CHECK(c["passed"] == true);
}

TEST_CASE("outputs are byte-identical across runs") {
  const auto dir = scratch("determinism");
  for (const char* name : {"free.ini", "cat.ini", "wfe-equivalence.ini"}) {
    const auto a = run_config_file(kConfigs / name, dir / "a", {});
    const auto b = run_config_file(kConfigs / name, dir / "b", {});
    CHECK(a.exit_code == 0);
    CHECK(b.exit_code == 0);
    CHECK(slurp(dir / "a" / "timeseries.csv") == slurp(dir / "b" / "timeseries.csv"));
    for (const auto& entry : fs::directory_iterator(dir / "a" / "fields")) {
      CHECK(slurp(entry.path()) == slurp(dir / "b" / "fields" / entry.path().filename()));
    }
  }
}

TEST_CASE("overrides reach the run and the summary") {
  const auto dir = scratch("overrides");
  write(dir / "free.ini", kSmallFree);
  const auto r = run_config_file(dir / "free.ini", dir / "out", {"norm=1e-6", "output.fields=false"});
  CHECK(r.exit_code == 0);
  const auto j = nlohmann::json::parse(slurp(dir / "out" / "summary.json"));
  CHECK(j["tolerances"]["norm"] == 1e-6);
  CHECK(j["config"]["output.fields"] == "false");
  CHECK(fs::is_empty(dir / "out" / "fields"));
}

TEST_CASE("an unstable time step aborts with exit code 1") {
  const auto dir = scratch("stability");
  const auto r = run_config_file(kConfigs / "cat.ini", dir / "out", {"dt=0.5", "t_final=1"});
  CHECK(r.exit_code == 1);
  CHECK(r.error.find("stability") != std::string::npos);
  const auto j = nlohmann::json::parse(slurp(dir / "out" / "summary.json"));
  CHECK(j["passed"] == false);
  CHECK(j["error"].get<std::string>().find("stability") != std::string::npos);
}

TEST_CASE("a too-tight tolerance names the failing check") {
  const auto dir = scratch("tight");
  write(dir / "free.ini", kSmallFree);
  const auto r = run_config_file(dir / "free.ini", dir / "out", {"spreading=1e-30"});
  CHECK(r.exit_code == 1);
  REQUIRE_FALSE(r.failed_checks().empty());
  CHECK(r.error.find(r.failed_checks().front()) != std::string::npos);
}

TEST_CASE("invalid configs give exit code 2") {
  const auto dir = scratch("invalid");
  write(dir / "bad.ini", "[run]\nscenario = free\n[grid]\nspacing = 3\n");
  CHECK(run_config_file(dir / "bad.ini", dir / "out", {}).exit_code == 2);
  CHECK(run_config_file(dir / "missing.ini", dir / "out", {}).exit_code == 2);
  CHECK(run_config_file(kConfigs / "free.ini", dir / "out", {"bogus=1"}).exit_code == 2);
  // Physically impossible setups are configuration errors too.
  CHECK(run_config_file(kConfigs / "free.ini", dir / "out", {"sigma=0.01"}).exit_code == 2);
}

TEST_CASE("verify over an empty suite") {
  const auto dir = scratch("empty");
  fs::create_directories(dir / "suite");
  const auto rep = verify_all(dir / "suite", dir / "out");
  CHECK(rep.exit_code == 0);
  CHECK(rep.results.empty());
  const auto j = nlohmann::json::parse(slurp(dir / "out" / "report.json"));
  CHECK(j["scenarios"].empty());
  CHECK(j["passed"] == true);
}

TEST_CASE("verify reports the failing config") {
  const auto dir = scratch("suite");
  fs::create_directories(dir / "suite");
  write(dir / "suite" / "a_good.ini", kSmallFree);
  write(dir / "suite" / "b_bad.ini", std::string(kSmallFree) + "[tolerance]\nspreading = 1e-30\n");
  const auto rep = verify_all(dir / "suite", dir / "out");
  CHECK(rep.exit_code == 1);
  REQUIRE(rep.results.size() == 2);
  CHECK(rep.results[0].exit_code == 0);
  CHECK(rep.results[1].exit_code == 1);
  const auto j = nlohmann::json::parse(slurp(dir / "out" / "report.json"));
  CHECK(j["scenarios"][1]["config"] == "b_bad.ini");
  CHECK_FALSE(j["scenarios"][1]["failed_checks"].empty());
  CHECK(fs::exists(dir / "out" / "a_good" / "summary.json"));
}

TEST_CASE("command line exit codes") {
  const auto dir = scratch("cli");
  write(dir / "free.ini", kSmallFree);
  write(dir / "bad.ini", "[run]\nscenario = free\nextra = 1\n");
  fs::create_directories(dir / "empty");
  CHECK(run_cli("run --config " + (dir / "free.ini").string() + " --out " + (dir / "o1").string()) == 0);
  CHECK(run_cli("run --config " + (dir / "free.ini").string() + " --out " + (dir / "o2").string() +
                " --set spreading=1e-30") == 1);
  CHECK(run_cli("run --config " + (dir / "bad.ini").string() + " --out " + (dir / "o3").string()) == 2);
  CHECK(run_cli("run --config " + (dir / "free.ini").string() + " --set nonsense") == 2);
  CHECK(run_cli("run") == 2);
  CHECK(run_cli("verify --suite " + (dir / "empty").string() + " --out " + (dir / "v").string()) == 0);
  CHECK(fs::exists(dir / "v" / "report.json"));
  CHECK(run_cli("verify --suite " + (dir / "nope").string() + " --out " + (dir / "v2").string()) == 2);
}
