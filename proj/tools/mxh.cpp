// Command-line front end for the scenario runner.
//
//   mxh list
//   mxh check <config.json> [--output-dir DIR] [--steps N] [--dt DT]
//   mxh run   <config.json> [--output-dir DIR] [--steps N] [--dt DT]
//
// MXH_THREADS sets the number of worker threads for the field kernels.

#include <CLI11.hpp>

#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "mxh/error.hpp"
#include "mxh/scenario.hpp"

namespace {

struct Overrides {
  std::string config;
  std::optional<std::string> output_dir;
  std::optional<int> steps;
  std::optional<double> dt;
};

void add_overrides(CLI::App* cmd, Overrides& o) {
  cmd->add_option("config", o.config, "scenario configuration (JSON)")->required();
  cmd->add_option("--output-dir", o.output_dir, "directory for CSV, snapshots and report.json");
  cmd->add_option("--steps", o.steps, "number of steps");
  cmd->add_option("--dt", o.dt, "time step");
}

mxh::ScenarioConfig resolve(const Overrides& o) {
  mxh::ScenarioConfig cfg = mxh::load_config(o.config);
  if (o.output_dir) cfg.output_dir = *o.output_dir;
  if (o.steps) cfg.steps = *o.steps;
  if (o.dt) cfg.dt = *o.dt;
  mxh::validate_config(cfg);
  return cfg;
}

void apply_thread_count() {
  const char* env = std::getenv("MXH_THREADS");
  if (!env || !*env) return;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (*end != '\0' || n <= 0) {
    throw mxh::Error(mxh::ErrorCode::invalid_config, "MXH_THREADS must be a positive integer, got '" +
                                                         std::string(env) + "'");
  }
#ifdef _OPENMP
  omp_set_num_threads(static_cast<int>(n));
#endif
}

void print_report(const mxh::RunReport& r) {
  std::cout << "scenario " << r.scenario << ": " << r.steps << " steps in " << std::fixed << std::setprecision(2)
            << r.wall_seconds << " s\n";
  std::cout << std::scientific << std::setprecision(3);
  std::cout << "  energy: H0 = " << r.initial_energy << ", band = " << r.energy_band
            << ", drift slope = " << r.energy_drift_slope << " per step\n";
  for (const auto& c : r.checks) {
    std::cout << "  " << (c.passed ? "PASS " : "FAIL ") << c.name << " = " << c.value << (c.lower_bound ? " > " : " < ")
              << c.threshold << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hamiltonian electrodynamics and gauge-particle scenarios"};
  app.require_subcommand(1);

  CLI::App* list = app.add_subcommand("list", "list the available scenarios");
  Overrides run_opts, check_opts;
  CLI::App* run = app.add_subcommand("run", "run a scenario");
  add_overrides(run, run_opts);
  CLI::App* check = app.add_subcommand("check", "validate a configuration without running it");
  add_overrides(check, check_opts);

  CLI11_PARSE(app, argc, argv);

  try {
    apply_thread_count();
    if (list->parsed()) {
      for (const auto& s : mxh::list_scenarios()) std::cout << std::left << std::setw(34) << s.name << s.description << '\n';
      return 0;
    }
    if (check->parsed()) {
      const mxh::ScenarioConfig cfg = resolve(check_opts);
      std::cout << "ok: " << cfg.scenario << ", " << cfg.steps << " steps at dt = " << cfg.dt << '\n';
      return 0;
    }
    const mxh::ScenarioConfig cfg = resolve(run_opts);
    const mxh::RunReport report = mxh::run_scenario(cfg);
    print_report(report);
    return report.passed() ? 0 : 1;
  } catch (const mxh::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
