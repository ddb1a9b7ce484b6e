#pragma once

// Named simulation and diagnostic scenarios driven by a JSON configuration.
//
// A configuration file looks like
//
//   {
//     "scenario": "vacuum_plane_wave",
//     "grid": {"points": [16, 16, 16], "lengths": [6.283185307179586, ...], "backend": "spectral"},
//     "dt": 0.078, "steps": 200, "output_every": 10,
//     "initial": {"family": "plane_wave", "params": {...}},
//     "source": {...},
//     "output_dir": "out",
//     "diagnostics": {"a_track": true, "symplecticity_probe": false, "oracle_comparison": true},
//     "seed": 1
//   }
//
// Every key except "scenario" may be omitted; missing keys take the
// scenario's defaults. Quantities are in light-speed units.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace mxh {

struct GridSpec {
  std::vector<int> points;
  std::vector<double> lengths;
  std::string backend = "spectral";

  bool operator==(const GridSpec&) const = default;
};

struct Diagnostics {
  bool a_track = false;
  bool symplecticity_probe = false;
  bool oracle_comparison = false;

  bool operator==(const Diagnostics&) const = default;
};

struct ScenarioConfig {
  std::string scenario;
  GridSpec grid;
  double dt = 0.0;
  int steps = 0;
  int output_every = 1;
  std::string initial_family;
  nlohmann::json initial_params = nlohmann::json::object();
  nlohmann::json source = nlohmann::json::object();
  std::string output_dir = "out";
  Diagnostics diagnostics;
  std::uint64_t seed = 1;

  bool operator==(const ScenarioConfig&) const = default;
};

nlohmann::json to_json(const ScenarioConfig& cfg);
/// Missing keys are filled from default_config(scenario). Throws
/// unknown_scenario or invalid_config naming the offending key.
ScenarioConfig config_from_json(const nlohmann::json& j);
ScenarioConfig load_config(const std::filesystem::path& path);

struct ScenarioInfo {
  std::string name;
  std::string description;
};

/// Sorted by name.
const std::vector<ScenarioInfo>& list_scenarios();
ScenarioConfig default_config(const std::string& name);

/// Checks dt > 0, steps > 0, output_every > 0, a known scenario, a valid
/// grid for field scenarios and dt within the stability bound.
void validate_config(const ScenarioConfig& cfg);

struct Check {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  /// value < threshold, or value > threshold when `lower_bound` is set
  bool lower_bound = false;
  bool passed = false;
};

struct RunReport {
  std::string scenario;
  int steps = 0;
  double wall_seconds = 0.0;
  double initial_energy = 0.0;
  /// Least-squares slope of energy against step index.
  double energy_drift_slope = 0.0;
  /// Largest |H - H0| over the run.
  double energy_band = 0.0;
  std::vector<std::pair<std::string, double>> final_residuals;
  std::vector<Check> checks;

  bool passed() const;
  const Check* find(const std::string& name) const;
};

nlohmann::json to_json(const RunReport& report);

/// Runs the scenario, writing `<scenario>.csv`, `report.json` and snapshot
/// files into cfg.output_dir (created if needed).
RunReport run_scenario(const ScenarioConfig& cfg);

}  // namespace mxh
