#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wfelab/config.hpp"
#include "wfelab/scenario.hpp"

namespace {

int report(const wfelab::ScenarioResult& r) {
  if (r.exit_code == 0) {
    std::cout << r.label << " [" << r.scenario << "]: PASS (" << r.checks.size() << " checks, "
              << r.wall_time_seconds << " s)\n";
  } else {
    std::cerr << r.label << " [" << r.scenario << "]: " << r.error << '\n';
  }
  return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wfe-lab: wavefunction-energy numerical laboratory"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run one scenario config");
  std::string config_path;
  std::string out_dir;
  std::vector<std::string> overrides;
  run->add_option("--config", config_path, "scenario config file")->required();
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--set", overrides, "override, e.g. --set grid.n=256")->take_all();

  auto* verify = app.add_subcommand("verify", "run every *.ini in a suite directory");
  std::string suite_dir;
  std::string verify_out = "wfe-lab-verify";
  verify->add_option("--suite", suite_dir, "directory of configs")->required();
  verify->add_option("--out", verify_out, "output directory for results and report.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (*run) return report(wfelab::run_config_file(config_path, out_dir, overrides));

  try {
    const auto rep = wfelab::verify_all(suite_dir, verify_out);
    for (const auto& r : rep.results) report(r);
    std::cout << rep.results.size() << " scenario(s), report: " << verify_out << "/report.json\n";
    return rep.exit_code;
  } catch (const wfelab::ConfigError& e) {
    std::cerr << e.what() << '\n';
    return 2;
  }
}
