// Command-line front end. Links only against the C interface.

#include "porosplit/porosplit.h"

#include <CLI11.hpp>

#include <cstdio>
#include <string>

namespace {

enum Exit { kPass = 0, kGateFailed = 1, kConfigError = 2, kRuntimeError = 3 };

int report_error(porosplit_status status) {
  std::fprintf(stderr, "porosplit: %s\n%s\n", porosplit_status_string(status), porosplit_last_error());
  return status == POROSPLIT_E_CONFIG || status == POROSPLIT_E_MATERIAL ? kConfigError
                                                                          : kRuntimeError;
}

int validate(const std::string& config) {
  size_t issues = 0;
  const porosplit_status st = porosplit_validate_file(config.c_str(), &issues);
  if (st == POROSPLIT_OK) {
    std::printf("%s: ok\n", config.c_str());
    return kPass;
  }
  if (issues == 0) return report_error(st);
  std::fprintf(stderr, "%s: %zu problem(s)\n%s\n", config.c_str(), issues, porosplit_last_error());
  return kConfigError;
}

int run(const std::string& config, const std::string& out_dir) {
  porosplit_scenario* sc = nullptr;
  porosplit_status st = porosplit_scenario_from_file(config.c_str(), &sc);
  if (st != POROSPLIT_OK) return report_error(st);

  porosplit_run* result = nullptr;
  st = porosplit_scenario_run(sc, out_dir.c_str(), &result);
  porosplit_scenario_destroy(sc);
  if (st != POROSPLIT_OK) return report_error(st);

  for (size_t i = 0; i < porosplit_run_gate_count(result); ++i) {
    const char* name = nullptr;
    const char* detail = nullptr;
    int passed = 0;
    porosplit_run_gate(result, i, &name, &passed, &detail);
    std::printf("%s %s (%s)\n", passed ? "PASS" : "FAIL", name, detail);
  }
  std::printf("manifest: %s\n", porosplit_run_manifest_path(result));
  const bool ok = porosplit_run_passed(result) != 0;
  porosplit_run_destroy(result);
  return ok ? kPass : kGateFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Iterative coupling solver for dynamic poroelasticity"};
  app.set_version_flag("--version", porosplit_version());
  app.require_subcommand(1);

  std::string config, out_dir;
  auto* run_cmd = app.add_subcommand("run", "run a scenario and write its reports");
  run_cmd->add_option("--config", config, "scenario JSON file")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--out", out_dir, "output directory (default: the config's \"output\")");

  auto* validate_cmd = app.add_subcommand("validate", "check a scenario file without running it");
  validate_cmd->add_option("--config", config, "scenario JSON file")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kConfigError;
  }

  if (*run_cmd) return run(config, out_dir);
  return validate(config);
}
