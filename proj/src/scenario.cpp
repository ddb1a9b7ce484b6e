#include "mxh/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <random>

#include "mxh/eb_reference.hpp"
#include "mxh/gauge.hpp"
#include "mxh/grid.hpp"
#include "mxh/initial_data.hpp"
#include "mxh/maxwell.hpp"
#include "mxh/snapshot.hpp"

namespace mxh {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

enum class Kind { field, particle };

struct ScenarioEntry {
  ScenarioInfo info;
  Kind kind;
  std::function<ScenarioConfig()> defaults;
};

GridSpec cube(int n, int dim = 3) {
  return GridSpec{std::vector<int>(dim, n), std::vector<double>(dim, kTwoPi), "spectral"};
}

double cube_spacing(const GridSpec& g) { return g.lengths.at(0) / g.points.at(0); }

ScenarioConfig base(const std::string& name) {
  ScenarioConfig c;
  c.scenario = name;
  c.output_dir = "out/" + name;
  return c;
}

const std::vector<ScenarioEntry>& registry() {
  static const std::vector<ScenarioEntry> entries = [] {
    std::vector<ScenarioEntry> e;
    e.push_back({{"chart_equivalence_su2", "su(2) particle in a curved field integrated in both charts and compared"},
                 Kind::particle, [] {
                   ScenarioConfig c = base("chart_equivalence_su2");
                   c.dt = 1e-3;
                   c.steps = 1000;
                   c.output_every = 10;
                   c.initial_family = "phase_point";
                   c.initial_params = {{"q", {0.3, -0.2, 0.5}}, {"p", {0.4, 0.1, -0.3}}, {"y", {0.7, -0.4, 0.5}}};
                   return c;
                 }});
    e.push_back({{"particle_constant_B", "gyromotion in a constant abelian magnetic field, checked against the circle"},
                 Kind::particle, [] {
                   ScenarioConfig c = base("particle_constant_B");
                   c.dt = kTwoPi / 1000.0;
                   c.steps = 10000;
                   c.output_every = 100;
                   c.initial_family = "phase_point";
                   c.initial_params = {{"b", 1.0}, {"q", {0.0, 0.0, 0.0}}, {"p", {0.3, 0.4, 0.2}}, {"y", {1.0}}};
                   return c;
                 }});
    e.push_back({{"particle_nonclosed_field_jacobi", "Jacobi defect of the bracket for the field B(q) = q"},
                 Kind::particle, [] {
                   ScenarioConfig c = base("particle_nonclosed_field_jacobi");
                   c.dt = 1e-3;
                   c.steps = 1000;
                   c.output_every = 10;
                   c.initial_family = "phase_point";
                   c.initial_params = {
                       {"q", {0.2, 0.1, -0.3}}, {"p", {0.5, -0.2, 0.1}}, {"y", {1.0}}, {"samples", 20}};
                   return c;
                 }});
    e.push_back({{"sourced_oscillating_charge", "reduced system driven by an oscillating neutral charge distribution"},
                 Kind::field, [] {
                   ScenarioConfig c = base("sourced_oscillating_charge");
                   c.grid = cube(16);
                   c.dt = 0.05 * cube_spacing(c.grid);
                   c.steps = 400;
                   c.output_every = 10;
                   c.initial_family = "charge_equilibrium";
                   c.source = {{"charge", 1.0}, {"frequency", 1.0}, {"mode", {1, 1, 1}}};
                   c.diagnostics.a_track = true;
                   return c;
                 }});
    e.push_back({{"static_charge_equilibrium", "static charge with its Coulomb field, a fixed point of the stepper"},
                 Kind::field, [] {
                   ScenarioConfig c = base("static_charge_equilibrium");
                   c.grid = cube(16);
                   c.dt = 0.2 * cube_spacing(c.grid);
                   c.steps = 1000;
                   c.output_every = 50;
                   c.initial_family = "random_charge";
                   c.initial_params = {{"max_mode", 2}, {"amplitude", 1.0}};
                   return c;
                 }});
    e.push_back({{"su2_pure_gauge", "Yang-Mills residuals of a flat su(2) connection and of a perturbed field"},
                 Kind::particle, [] {
                   ScenarioConfig c = base("su2_pure_gauge");
                   c.dt = 1e-3;
                   c.steps = 500;
                   c.output_every = 10;
                   c.initial_family = "phase_point";
                   c.initial_params = {{"q", {0.1, 0.2, -0.1}},
                                       {"p", {0.3, -0.1, 0.2}},
                                       {"y", {0.5, 0.2, -0.3}},
                                       {"samples", 50},
                                       {"perturbation", 0.5}};
                   return c;
                 }});
    e.push_back({{"vacuum_plane_wave", "single-mode plane wave in the extended vacuum system"}, Kind::field, [] {
                   ScenarioConfig c = base("vacuum_plane_wave");
                   c.grid = cube(16);
                   c.dt = 0.02;
                   c.steps = 222;
                   c.output_every = 10;
                   c.initial_family = "plane_wave";
                   c.initial_params = {{"mode", {1, 1, 0}}, {"amplitude", 1.0}, {"polarization", {1.0, -1.0, 0.0}}};
                   c.diagnostics.oracle_comparison = true;
                   return c;
                 }});
    e.push_back({{"vacuum_random", "random Lorentz-consistent vacuum data in the extended system"}, Kind::field, [] {
                   ScenarioConfig c = base("vacuum_random");
                   c.grid = cube(16);
                   c.dt = 0.05 * cube_spacing(c.grid);
                   c.steps = 1000;
                   c.output_every = 10;
                   c.initial_family = "random_band_limited";
                   c.initial_params = {{"max_mode", 2}, {"amplitude", 1.0}};
                   c.diagnostics.symplecticity_probe = true;
                   return c;
                 }});
    return e;
  }();
  return entries;
}

const ScenarioEntry& entry(const std::string& name) {
  for (const auto& e : registry()) {
    if (e.info.name == name) return e;
  }
  throw Error(ErrorCode::unknown_scenario, "scenario '" + name + "' does not exist; run `mxh list` for the names");
}

GridPtr make_grid(const GridSpec& spec) {
  return Grid::make(spec.points, spec.lengths, backend_from_string(spec.backend));
}

template <class T>
T read_key(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::invalid_config, std::string("key '") + key + "': " + ex.what());
  }
}

Eigen::VectorXd param_vec(const json& params, const char* key, int size) {
  if (!params.contains(key)) {
    throw Error(ErrorCode::invalid_config, std::string("initial.params.") + key + " is required");
  }
  const auto v = read_key<std::vector<double>>(params, key, {});
  if (static_cast<int>(v.size()) != size) {
    throw Error(ErrorCode::invalid_config, std::string("initial.params.") + key + " needs " + std::to_string(size) +
                                               " entries, got " + std::to_string(v.size()));
  }
  return Eigen::Map<const Eigen::VectorXd>(v.data(), size);
}

template <class T>
T param(const json& params, const char* key, T fallback) {
  if (!params.contains(key)) return fallback;
  try {
    return params.at(key).get<T>();
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::invalid_config, std::string("parameter '") + key + "': " + ex.what());
  }
}

// ---------------------------------------------------------------------------
// Report helpers

void add_check(RunReport& r, std::string name, double value, double threshold, bool lower_bound = false) {
  const bool ok = std::isfinite(value) && (lower_bound ? value > threshold : value < threshold);
  r.checks.push_back(Check{std::move(name), value, threshold, lower_bound, ok});
}

struct EnergyLog {
  std::vector<double> step;
  std::vector<double> H;

  void add(int n, double h) {
    step.push_back(n);
    H.push_back(h);
  }

  void fill(RunReport& r) const {
    if (H.empty()) return;
    r.initial_energy = H.front();
    double band = 0.0;
    for (double h : H) band = std::max(band, std::abs(h - H.front()));
    r.energy_band = band;
    const double n = static_cast<double>(H.size());
    if (H.size() < 2) return;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < H.size(); ++i) {
      sx += step[i];
      sy += H[i];
      sxx += step[i] * step[i];
      sxy += step[i] * H[i];
    }
    const double denom = n * sxx - sx * sx;
    r.energy_drift_slope = denom > 0.0 ? (n * sxy - sx * sy) / denom : 0.0;
  }
};

double relative_l2(const VectorField& a, const VectorField& b) {
  const VectorField d = a - b;
  const double nb = std::sqrt(inner(b, b));
  return std::sqrt(inner(d, d)) / (nb > 0.0 ? nb : 1.0);
}

void snapshot_extended(const fs::path& dir, const ExtendedState& s, int step) {
  const std::string tag = std::to_string(step);
  write_snapshot(dir / ("A_" + tag + ".bin"), "A", s.A, s.time);
  write_snapshot(dir / ("Y_" + tag + ".bin"), "Y", s.Y, s.time);
  write_snapshot(dir / ("eta_" + tag + ".bin"), "eta", s.eta, s.time);
  write_snapshot(dir / ("W_" + tag + ".bin"), "W", s.W, s.time);
}

void snapshot_reduced(const fs::path& dir, const ReducedState& s, int step) {
  const std::string tag = std::to_string(step);
  write_snapshot(dir / ("S_" + tag + ".bin"), "S", s.S, s.time);
  write_snapshot(dir / ("B_" + tag + ".bin"), "B", s.B, s.time);
  write_snapshot(dir / ("F_" + tag + ".bin"), "F", s.F, s.time);
  write_snapshot(dir / ("eta_" + tag + ".bin"), "eta", s.eta, s.time);
  write_snapshot(dir / ("W_" + tag + ".bin"), "W", s.W, s.time);
  if (s.A) write_snapshot(dir / ("A_" + tag + ".bin"), "A", *s.A, s.time);
}

const std::vector<std::string> kFieldColumns{"t", "H", "lorentz", "gauss", "divB", "faraday", "ampere"};

// ---------------------------------------------------------------------------
// Extended vacuum runs

void run_extended(const ScenarioConfig& cfg, RunReport& report, const fs::path& out) {
  const GridPtr grid = make_grid(cfg.grid);
  const json& ip = cfg.initial_params;

  ExtendedState s = ExtendedState::zero(grid);
  std::optional<EBState> eb;
  std::array<int, 3> mode{};
  std::array<double, 3> pol{};
  double amplitude = 0.0;
  if (cfg.initial_family == "plane_wave") {
    const auto m = param<std::vector<int>>(ip, "mode", {1, 0, 0});
    const auto p = param<std::vector<double>>(ip, "polarization", {0.0, 1.0, 0.0});
    if (m.size() != 3 || p.size() != 3) {
      throw Error(ErrorCode::invalid_config, "initial.params.mode and polarization need 3 entries");
    }
    std::copy(m.begin(), m.end(), mode.begin());
    std::copy(p.begin(), p.end(), pol.begin());
    amplitude = param(ip, "amplitude", 1.0);
    PlaneWave pw = plane_wave_state(grid, mode, amplitude, pol);
    s = std::move(pw.extended);
    eb = std::move(pw.eb);
  } else if (cfg.initial_family == "random_band_limited") {
    const int max_mode = param(ip, "max_mode", 3);
    const double amp = param(ip, "amplitude", 1.0);
    s = ExtendedState::consistent(random_band_limited_vector(grid, max_mode, cfg.seed, amp),
                                  random_band_limited_vector(grid, max_mode, cfg.seed + 1000, amp),
                                  random_band_limited(grid, max_mode, cfg.seed + 2000, amp));
  } else {
    throw Error(ErrorCode::invalid_config,
                "initial.family '" + cfg.initial_family + "' is not available for " + cfg.scenario);
  }

  const double scale = s.scale();
  const double dt = cfg.dt;

  std::optional<std::pair<ExtendedState, ExtendedState>> probe;
  double pairing0 = 0.0;
  if (cfg.diagnostics.symplecticity_probe) {
    auto perturb = [&](std::uint64_t seed) {
      return ExtendedState(random_band_limited_vector(grid, 2, seed, 1e-3),
                           random_band_limited_vector(grid, 2, seed + 1, 1e-3),
                           random_band_limited(grid, 2, seed + 2, 1e-3), random_band_limited(grid, 2, seed + 3, 1e-3));
    };
    probe.emplace(perturb(cfg.seed + 7000), perturb(cfg.seed + 8000));
    pairing0 = canonical_pairing(probe->first, probe->second);
  }

  fs::create_directories(out / "snapshots");
  snapshot_extended(out / "snapshots", s, 0);
  CsvWriter csv(out / (cfg.scenario + ".csv"), kFieldColumns);
  EnergyLog energy;
  double lorentz_max = 0.0;
  MaxwellResiduals last{};

  auto emit = [&](int n, const ExtendedState& prev) {
    const double H = hamiltonian_extended(s);
    energy.add(n, H);
    const EMFields f = fields_from_extended(s);
    MaxwellResiduals r{};
    if (n > 0) {
      const EMFields fp = fields_from_extended(prev);
      r = maxwell_residuals(f.E, f.B, ScalarField(grid), VectorField(grid), fp.E, fp.B, dt);
    } else {
      r.gauss = rms(div(f.E));
      r.divB = rms(div(f.B));
    }
    last = r;
    csv.row({s.time, H, rms(lorentz_residual(s)), r.gauss, r.divB, r.faraday, r.ampere});
  };

  lorentz_max = max_abs(lorentz_residual(s));
  emit(0, s);
  ExtendedStepper stepper(s, dt);
  for (int n = 1; n <= cfg.steps; ++n) {
    const bool output = n % cfg.output_every == 0 || n == cfg.steps;
    std::optional<ExtendedState> prev;
    if (output) prev = stepper.state();
    stepper.step();
    s = stepper.state();
    if (eb) eb = step_eb(*eb, VectorField(grid), dt);
    if (probe) {
      probe->first = leapfrog_extended(probe->first, dt);
      probe->second = leapfrog_extended(probe->second, dt);
    }
    lorentz_max = std::max(lorentz_max, max_abs(lorentz_residual(s)));
    if (output) emit(n, *prev);
  }
  snapshot_extended(out / "snapshots", s, cfg.steps);

  energy.fill(report);
  report.final_residuals = {{"lorentz_max", lorentz_max},   {"gauss", last.gauss},     {"divB", last.divB},
                            {"faraday", last.faraday},      {"ampere", last.ampere}};
  add_check(report, "lorentz_norm", lorentz_max, 1e-10 * scale);
  add_check(report, "energy_band", report.energy_band, 1e-3 * report.initial_energy);
  if (probe) {
    const double pairing = canonical_pairing(probe->first, probe->second);
    const double ref = std::max(std::abs(pairing0), 1e-300);
    add_check(report, "symplectic_pairing_drift", std::abs(pairing - pairing0) / ref, 1e-10);
  }
  if (cfg.diagnostics.oracle_comparison && eb) {
    const EMFields exact = plane_wave_fields(grid, mode, amplitude, pol, s.time);
    const EMFields f = fields_from_extended(s);
    add_check(report, "analytic_error_E", relative_l2(f.E, exact.E), 1e-3);
    add_check(report, "analytic_error_B", relative_l2(f.B, exact.B), 1e-3);
    add_check(report, "eb_oracle_difference_E", relative_l2(f.E, eb->E), 1e-3);
    add_check(report, "eb_oracle_difference_B", relative_l2(f.B, synchronized_B(*eb)), 1e-3);
  }
}

// ---------------------------------------------------------------------------
// Reduced sourced runs

ScalarField product_of_sines(const GridPtr& grid, const std::vector<int>& mode) {
  return ScalarField::from_function(grid, [&](double x, double y, double z) {
    const std::array<double, 3> pos{x, y, z};
    double v = 1.0;
    for (int a = 0; a < grid->dim(); ++a) v *= std::sin(kTwoPi * mode[a] * pos[a] / grid->lengths()[a]);
    return v;
  });
}

void run_reduced(const ScenarioConfig& cfg, RunReport& report, const fs::path& out) {
  const GridPtr grid = make_grid(cfg.grid);
  const double dt = cfg.dt;

  std::optional<SourceSpec> src;
  ReducedState s{VectorField(grid), VectorField(grid), ScalarField(grid), ScalarField(grid), VectorField(grid), 0.0, std::nullopt};
  if (cfg.scenario == "sourced_oscillating_charge") {
    const double q0 = param(cfg.source, "charge", 1.0);
    const double omega = param(cfg.source, "frequency", 1.0);
    const auto mode = param<std::vector<int>>(cfg.source, "mode", {1, 1, 1});
    if (mode.size() < static_cast<std::size_t>(grid->dim())) {
      throw Error(ErrorCode::invalid_config, "source.mode needs one entry per grid axis");
    }
    const ScalarField shape = product_of_sines(grid, mode);
    src.emplace(SourceSpec::from_charge(
        grid, [shape, q0, omega](double t) { return (q0 * std::cos(omega * t)) * shape; },
        [shape, q0, omega](double t) { return (-q0 * omega * std::sin(omega * t)) * shape; }));
    const ScalarField rho0 = src->rho(0.0);
    // W from the instantaneous Coulomb problem, eta from the gauge condition.
    const ScalarField drho0 = (-q0 * omega * std::sin(0.0)) * shape;
    s = make_reduced_state(rho0, VectorField(grid), -inv_laplacian(rho0), inv_laplacian(drho0), 0.0,
                           cfg.diagnostics.a_track);
  } else {
    const int max_mode = param(cfg.initial_params, "max_mode", 2);
    const double amp = param(cfg.initial_params, "amplitude", 1.0);
    const ScalarField rho = random_band_limited(grid, max_mode, cfg.seed, amp);
    src.emplace(SourceSpec::static_charge(rho));
    s = make_reduced_state(rho, VectorField(grid), -inv_laplacian(rho), ScalarField(grid), 0.0,
                           cfg.diagnostics.a_track);
  }
  const ScalarField rho_init = src->rho(0.0);
  const double scale = std::max(s.scale(), max_abs(rho_init));
  const ReducedState initial = s;

  fs::create_directories(out / "snapshots");
  snapshot_reduced(out / "snapshots", s, 0);
  CsvWriter csv(out / (cfg.scenario + ".csv"), kFieldColumns);
  EnergyLog energy;

  double gauss_max = 0.0, divB_max = 0.0, faraday_max = 0.0, ampere_max = 0.0;
  double wave_scalar_max = 0.0, wave_vector_max = 0.0, deviation_max = 0.0;
  auto lorentz = [](const ReducedState& r) { return r.A ? rms(div(*r.A) - r.eta) : 0.0; };

  {
    const VectorField E = electric_field(s);
    gauss_max = rms(div(E) - rho_init);
    divB_max = rms(div(s.B));
    const double H = hamiltonian_reduced(s);
    energy.add(0, H);
    csv.row({0.0, H, lorentz(s), gauss_max, divB_max, 0.0, 0.0});
  }

  std::optional<ReducedState> prev2;
  for (int n = 1; n <= cfg.steps; ++n) {
    ReducedState prev = s;
    s = step_reduced(s, *src, dt);
    const bool output = n % cfg.output_every == 0 || n == cfg.steps;
    if (output) {
      const VectorField E = electric_field(s);
      const VectorField Ep = electric_field(prev);
      const MaxwellResiduals r =
          maxwell_residuals(E, s.B, src->rho(s.time), src->J(prev.time + 0.5 * dt), Ep, prev.B, dt);
      gauss_max = std::max(gauss_max, r.gauss);
      divB_max = std::max(divB_max, r.divB);
      faraday_max = std::max(faraday_max, r.faraday);
      ampere_max = std::max(ampere_max, r.ampere);
      if (prev2 && s.A) {
        const WaveResiduals w = wave_residuals(*prev2, prev, s, *src);
        wave_scalar_max = std::max(wave_scalar_max, w.scalar);
        wave_vector_max = std::max(wave_vector_max, w.vector);
      }
      if (cfg.scenario == "static_charge_equilibrium") {
        double d = std::max({max_abs(s.S - initial.S), max_abs(s.B - initial.B), max_abs(s.F - initial.F),
                             max_abs(s.eta - initial.eta), max_abs(s.W - initial.W)});
        deviation_max = std::max(deviation_max, d);
      }
      const double H = hamiltonian_reduced(s);
      energy.add(n, H);
      csv.row({s.time, H, lorentz(s), r.gauss, r.divB, r.faraday, r.ampere});
    }
    prev2 = std::move(prev);
  }
  snapshot_reduced(out / "snapshots", s, cfg.steps);

  energy.fill(report);
  report.final_residuals = {{"gauss_max", gauss_max}, {"divB_max", divB_max}, {"faraday_max", faraday_max},
                            {"ampere_max", ampere_max}};
  add_check(report, "gauss", gauss_max, 1e-8 * scale);
  add_check(report, "divB", divB_max, 1e-10 * scale);
  add_check(report, "faraday", faraday_max, 1e-3 * scale);
  add_check(report, "ampere", ampere_max, 1e-3 * scale);
  if (s.A && cfg.steps >= 2) {
    report.final_residuals.emplace_back("wave_scalar_max", wave_scalar_max);
    report.final_residuals.emplace_back("wave_vector_max", wave_vector_max);
    add_check(report, "wave_scalar", wave_scalar_max, 1e-3 * scale);
    add_check(report, "wave_vector", wave_vector_max, 1e-3 * scale);
  }
  if (cfg.scenario == "static_charge_equilibrium") {
    report.final_residuals.emplace_back("fixed_point_deviation", deviation_max);
    add_check(report, "fixed_point_deviation", deviation_max, 1e-12 * scale);
  }
}

// ---------------------------------------------------------------------------
// Particle runs

std::vector<std::string> particle_columns(int n, int m) {
  std::vector<std::string> cols{"t"};
  for (int i = 1; i <= n; ++i) cols.push_back("q" + std::to_string(i));
  for (int i = 1; i <= n; ++i) cols.push_back("p" + std::to_string(i));
  for (int i = 1; i <= m; ++i) cols.push_back("y" + std::to_string(i));
  cols.push_back("H");
  return cols;
}

void write_trajectory(const fs::path& path, const gauge::Trajectory& traj, int n, int m, int every) {
  CsvWriter csv(path, particle_columns(n, m));
  for (std::size_t s = 0; s < traj.z.size(); ++s) {
    if (s % every != 0 && s + 1 != traj.z.size()) continue;
    std::vector<double> row{traj.t[s]};
    const auto& z = traj.z[s];
    for (int i = 0; i < 2 * n; ++i) row.push_back(z(i));
    for (int i = 0; i < m; ++i) row.push_back(z(2 * n + m + i));
    row.push_back(traj.energy[s]);
    csv.row(row);
  }
}

gauge::PhasePoint phase_point(const json& ip, int n, int m) {
  return gauge::PhasePoint{param_vec(ip, "q", n), param_vec(ip, "p", n), Eigen::VectorXd::Zero(m),
                           param_vec(ip, "y", m), gauge::Chart::twisted};
}

double max_energy_error(const gauge::Trajectory& traj) {
  double e = 0.0;
  for (double h : traj.energy) e = std::max(e, std::abs(h - traj.energy.front()));
  return e;
}

void fill_energy(RunReport& report, const gauge::Trajectory& traj) {
  EnergyLog log;
  for (std::size_t s = 0; s < traj.energy.size(); ++s) log.add(static_cast<int>(s), traj.energy[s]);
  log.fill(report);
}

void run_particle(const ScenarioConfig& cfg, RunReport& report, const fs::path& out) {
  using namespace gauge;
  fs::create_directories(out);
  const json& ip = cfg.initial_params;
  const fs::path csv_path = out / (cfg.scenario + ".csv");

  if (cfg.scenario == "particle_constant_B") {
    const double b = param(ip, "b", 1.0);
    const GaugeField field = constant_abelian_field(0.0, 0.0, b);
    const LieAlgebra u1 = LieAlgebra::abelian(1);
    const PhasePoint z0 = phase_point(ip, 3, 1);
    const Trajectory traj = integrate_particle(free_kinetic_energy(3, 1), twisted_structure(field, u1), z0, cfg.dt,
                                               cfg.steps);
    write_trajectory(csv_path, traj, 3, 1, cfg.output_every);
    // Guiding centre and radius of the exact circle.
    const double omega = z0.y(0) * b;
    if (omega == 0.0) throw Error(ErrorCode::invalid_config, "initial.params: y * b must be nonzero");
    const double cx = z0.q(0) + z0.p(1) / omega;
    const double cy = z0.q(1) - z0.p(0) / omega;
    const double radius = std::hypot(z0.p(0), z0.p(1)) / std::abs(omega);
    double radius_error = 0.0;
    for (const auto& z : traj.z) radius_error = std::max(radius_error, std::abs(std::hypot(z(0) - cx, z(1) - cy) - radius));
    fill_energy(report, traj);
    report.final_residuals = {{"radius_error", radius_error}, {"energy_error", max_energy_error(traj)}};
    add_check(report, "gyroradius_error", radius_error, 1e-6);
    add_check(report, "energy_drift", max_energy_error(traj), 1e-8 * traj.energy.front());
  } else if (cfg.scenario == "particle_nonclosed_field_jacobi") {
    const GaugeField field = nonclosed_abelian_field();
    const LieAlgebra u1 = LieAlgebra::abelian(1);
    const PoissonStructure P = twisted_structure(field, u1);
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    const int samples = param(ip, "samples", 20);
    double worst = 0.0;
    for (int k = 0; k < samples; ++k) {
      Eigen::VectorXd z(8);
      for (int i = 0; i < 8; ++i) z(i) = U(rng);
      z(7) = 0.5 + std::abs(z(7));
      // cyclic sum over (p1, p2, p3) equals -div(B) y = -3 y in this orientation
      worst = std::max(worst, std::abs(jacobi_residual(P, z, 3, 4, 5) + 3.0 * z(7)));
    }
    const PhasePoint z0 = phase_point(ip, 3, 1);
    const Trajectory traj = integrate_particle(free_kinetic_energy(3, 1), P, z0, cfg.dt, cfg.steps);
    write_trajectory(csv_path, traj, 3, 1, cfg.output_every);
    fill_energy(report, traj);
    report.final_residuals = {{"jacobi_minus_expected", worst}, {"energy_error", max_energy_error(traj)}};
    add_check(report, "jacobi_cyclic_sum_matches_minus_3y", worst, 1e-6);
    add_check(report, "energy_drift", max_energy_error(traj), 1e-8 * std::max(traj.energy.front(), 1e-300));
  } else if (cfg.scenario == "su2_pure_gauge") {
    const LieAlgebra su2 = LieAlgebra::su2();
    const GaugeField flat = su2_pure_gauge_field();
    const GaugeField bent = su2_perturbed_field(param(ip, "perturbation", 0.5));
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    const int samples = param(ip, "samples", 50);
    double flat_max = 0.0, bent_max = 0.0, flat_curvature = 0.0;
    for (int k = 0; k < samples; ++k) {
      const Eigen::Vector3d q(U(rng), U(rng), U(rng));
      flat_max = std::max(flat_max, ym_field_residual(flat, su2, q).max_abs());
      bent_max = std::max(bent_max, ym_field_residual(bent, su2, q).max_abs());
      for (const auto& F : flat.curvature(q, su2)) flat_curvature = std::max(flat_curvature, F.cwiseAbs().maxCoeff());
    }
    const PhasePoint z0 = phase_point(ip, 3, 3);
    const Trajectory traj = integrate_particle(free_kinetic_energy(3, 3), twisted_structure(flat, su2), z0, cfg.dt,
                                               cfg.steps);
    write_trajectory(csv_path, traj, 3, 3, cfg.output_every);
    fill_energy(report, traj);
    report.final_residuals = {
        {"flat_ym_residual", flat_max}, {"perturbed_ym_residual", bent_max}, {"flat_curvature", flat_curvature}};
    add_check(report, "flat_ym_residual", flat_max, 1e-6);
    add_check(report, "perturbed_ym_residual", bent_max, 0.1, true);
  } else if (cfg.scenario == "chart_equivalence_su2") {
    const LieAlgebra su2 = LieAlgebra::su2();
    const GaugeField field = su2_smooth_field();
    const PhasePoint z0 = phase_point(ip, 3, 3);
    const Observable H = free_kinetic_energy(3, 3);
    const Trajectory traj = integrate_particle(H, twisted_structure(field, su2), z0, cfg.dt, cfg.steps);
    write_trajectory(csv_path, traj, 3, 3, cfg.output_every);
    const double deviation = chart_equivalence(z0, field, su2, H, cfg.dt, cfg.steps);
    fill_energy(report, traj);
    report.final_residuals = {{"chart_deviation", deviation}};
    add_check(report, "chart_deviation", deviation, 1e-6);
  } else {
    throw Error(ErrorCode::unknown_scenario, "scenario '" + cfg.scenario + "' has no particle runner");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

json to_json(const ScenarioConfig& cfg) {
  json g = json::object();
  g["points"] = cfg.grid.points;
  g["lengths"] = cfg.grid.lengths;
  g["backend"] = cfg.grid.backend;
  return json{{"scenario", cfg.scenario},
              {"grid", g},
              {"dt", cfg.dt},
              {"steps", cfg.steps},
              {"output_every", cfg.output_every},
              {"initial", {{"family", cfg.initial_family}, {"params", cfg.initial_params}}},
              {"source", cfg.source},
              {"output_dir", cfg.output_dir},
              {"diagnostics",
               {{"a_track", cfg.diagnostics.a_track},
                {"symplecticity_probe", cfg.diagnostics.symplecticity_probe},
                {"oracle_comparison", cfg.diagnostics.oracle_comparison}}},
              {"seed", cfg.seed}};
}

ScenarioConfig config_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::invalid_config, "configuration must be a JSON object");
  if (!j.contains("scenario")) throw Error(ErrorCode::invalid_config, "key 'scenario' is required");
  ScenarioConfig c = default_config(read_key<std::string>(j, "scenario", ""));
  static const std::vector<std::string> known{"scenario", "grid",        "dt",          "steps", "output_every",
                                              "initial",  "source",      "output_dir",  "diagnostics", "seed"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw Error(ErrorCode::invalid_config, "unknown key '" + key + "'");
    }
  }
  if (j.contains("grid")) {
    const json& g = j.at("grid");
    c.grid.points = read_key(g, "points", c.grid.points);
    c.grid.lengths = read_key(g, "lengths", c.grid.lengths);
    c.grid.backend = read_key(g, "backend", c.grid.backend);
  }
  c.dt = read_key(j, "dt", c.dt);
  c.steps = read_key(j, "steps", c.steps);
  c.output_every = read_key(j, "output_every", c.output_every);
  if (j.contains("initial")) {
    const json& i = j.at("initial");
    c.initial_family = read_key(i, "family", c.initial_family);
    if (i.contains("params")) c.initial_params = i.at("params");
  }
  if (j.contains("source")) c.source = j.at("source");
  c.output_dir = read_key(j, "output_dir", c.output_dir);
  if (j.contains("diagnostics")) {
    const json& d = j.at("diagnostics");
    c.diagnostics.a_track = read_key(d, "a_track", c.diagnostics.a_track);
    c.diagnostics.symplecticity_probe = read_key(d, "symplecticity_probe", c.diagnostics.symplecticity_probe);
    c.diagnostics.oracle_comparison = read_key(d, "oracle_comparison", c.diagnostics.oracle_comparison);
  }
  c.seed = read_key(j, "seed", c.seed);
  return c;
}

ScenarioConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open config '" + path.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::invalid_config, path.string() + ": " + ex.what());
  }
  return config_from_json(j);
}

const std::vector<ScenarioInfo>& list_scenarios() {
  static const std::vector<ScenarioInfo> infos = [] {
    std::vector<ScenarioInfo> v;
    for (const auto& e : registry()) v.push_back(e.info);
    std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
    return v;
  }();
  return infos;
}

ScenarioConfig default_config(const std::string& name) { return entry(name).defaults(); }

void validate_config(const ScenarioConfig& cfg) {
  const ScenarioEntry& e = entry(cfg.scenario);
  if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt)) {
    throw Error(ErrorCode::invalid_config, "dt must be positive, got " + std::to_string(cfg.dt));
  }
  if (cfg.steps <= 0) throw Error(ErrorCode::invalid_config, "steps must be positive, got " + std::to_string(cfg.steps));
  if (cfg.output_every <= 0) {
    throw Error(ErrorCode::invalid_config, "output_every must be positive, got " + std::to_string(cfg.output_every));
  }
  if (e.kind == Kind::field) {
    const GridPtr grid = make_grid(cfg.grid);
    require_stable_dt(*grid, cfg.dt);
  }
}

// ---------------------------------------------------------------------------
// Reports

bool RunReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

const Check* RunReport::find(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

json to_json(const RunReport& r) {
  json checks = json::array();
  for (const auto& c : r.checks) {
    checks.push_back({{"name", c.name},
                      {"value", c.value},
                      {"threshold", c.threshold},
                      {"comparison", c.lower_bound ? ">" : "<"},
                      {"passed", c.passed}});
  }
  json residuals = json::object();
  for (const auto& [k, v] : r.final_residuals) residuals[k] = v;
  return json{{"scenario", r.scenario},
              {"steps", r.steps},
              {"wall_seconds", r.wall_seconds},
              {"initial_energy", r.initial_energy},
              {"energy_drift_slope", r.energy_drift_slope},
              {"energy_band", r.energy_band},
              {"final_residuals", residuals},
              {"checks", checks},
              {"passed", r.passed()}};
}

RunReport run_scenario(const ScenarioConfig& cfg) {
  validate_config(cfg);
  const auto start = std::chrono::steady_clock::now();
  const fs::path out(cfg.output_dir);
  fs::create_directories(out);

  RunReport report;
  report.scenario = cfg.scenario;
  report.steps = cfg.steps;
  const ScenarioEntry& e = entry(cfg.scenario);
  if (e.kind == Kind::particle) {
    run_particle(cfg, report, out);
  } else if (cfg.scenario == "vacuum_plane_wave" || cfg.scenario == "vacuum_random") {
    run_extended(cfg, report, out);
  } else {
    run_reduced(cfg, report, out);
  }
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  json doc = to_json(report);
  doc["config"] = to_json(cfg);
  std::ofstream f(out / "report.json");
  if (!f) throw Error(ErrorCode::io, "cannot write " + (out / "report.json").string());
  f << doc.dump(2) << '\n';
  return report;
}

}  // namespace mxh
