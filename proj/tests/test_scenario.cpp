#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "mxh/scenario.hpp"
#include "mxh/snapshot.hpp"

using namespace mxh;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an mxh::Error");
  return ErrorCode::io;
}

std::string error_text(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mxh_test_scenario_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string first_line(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

template <class T>
T read_at(const std::string& bytes, std::size_t offset) {
  T v;
  std::memcpy(&v, bytes.data() + offset, sizeof(T));
  return v;
}

}  // namespace

TEST_CASE("scenario list") {
  const auto& list = list_scenarios();
  std::vector<std::string> names;
  for (const auto& s : list) {
    names.push_back(s.name);
    CHECK_FALSE(s.description.empty());
  }
  CHECK(std::is_sorted(names.begin(), names.end()));
  for (const char* required : {"vacuum_plane_wave", "sourced_oscillating_charge", "static_charge_equilibrium",
                               "particle_constant_B", "particle_nonclosed_field_jacobi", "su2_pure_gauge",
                               "chart_equivalence_su2"}) {
    CHECK(std::find(names.begin(), names.end(), required) != names.end());
  }
  CHECK(&list_scenarios() == &list);
}

TEST_CASE("default configs are valid and round-trip") {
  for (const auto& s : list_scenarios()) {
    CAPTURE(s.name);
    const ScenarioConfig c = default_config(s.name);
    CHECK(c.scenario == s.name);
    CHECK_NOTHROW(validate_config(c));
    CHECK(config_from_json(to_json(c)) == c);
    // and through text
    CHECK(config_from_json(nlohmann::json::parse(to_json(c).dump())) == c);
  }
}

TEST_CASE("missing keys take the scenario defaults") {
  const ScenarioConfig c = config_from_json({{"scenario", "vacuum_plane_wave"}, {"steps", 7}});
  ScenarioConfig expected = default_config("vacuum_plane_wave");
  expected.steps = 7;
  CHECK(c == expected);
  const ScenarioConfig d = config_from_json({{"scenario", "vacuum_random"}, {"grid", {{"backend", "central2"}}}});
  CHECK(d.grid.backend == "central2");
  CHECK(d.grid.points == default_config("vacuum_random").grid.points);
}

TEST_CASE("configuration errors are distinct and name the field") {
  CHECK(code_of([] { default_config("warp_drive"); }) == ErrorCode::unknown_scenario);
  CHECK(error_text([] { default_config("warp_drive"); }).find("warp_drive") != std::string::npos);
  CHECK(code_of([] { config_from_json({{"steps", 3}}); }) == ErrorCode::invalid_config);
  CHECK(code_of([] { config_from_json(nlohmann::json::array()); }) == ErrorCode::invalid_config);
  CHECK(error_text([] { config_from_json({{"scenario", "vacuum_random"}, {"stepz", 3}}); }).find("stepz") !=
        std::string::npos);
  CHECK(error_text([] { config_from_json({{"scenario", "vacuum_random"}, {"dt", "fast"}}); }).find("dt") !=
        std::string::npos);

  ScenarioConfig c = default_config("vacuum_plane_wave");
  c.grid.points = {16, 15, 16};
  CHECK(code_of([&] { validate_config(c); }) == ErrorCode::invalid_grid);
  c = default_config("vacuum_plane_wave");
  c.grid.backend = "yee";
  CHECK(code_of([&] { validate_config(c); }) == ErrorCode::invalid_grid);
  c = default_config("vacuum_plane_wave");
  c.dt = 1.0;
  CHECK(code_of([&] { validate_config(c); }) == ErrorCode::step_size);
  CHECK(error_text([&] { validate_config(c); }).find("stability bound") != std::string::npos);
  c.dt = -0.1;
  CHECK(error_text([&] { validate_config(c); }).find("dt") != std::string::npos);
  c = default_config("vacuum_plane_wave");
  c.steps = 0;
  CHECK(error_text([&] { validate_config(c); }).find("steps") != std::string::npos);
  c = default_config("particle_constant_B");
  c.output_every = 0;
  CHECK(error_text([&] { validate_config(c); }).find("output_every") != std::string::npos);

  CHECK(code_of([] { load_config("/nonexistent/config.json"); }) == ErrorCode::io);
  const fs::path dir = scratch("bad_json");
  fs::create_directories(dir);
  std::ofstream(dir / "c.json") << "{\"scenario\": ";
  CHECK(code_of([&] { load_config(dir / "c.json"); }) == ErrorCode::invalid_config);
}

TEST_CASE("config files from the test corpus") {
  const fs::path dir = MXH_TEST_CONFIG_DIR;
  const ScenarioConfig pw = load_config(dir / "plane_wave.json");
  CHECK(pw.scenario == "vacuum_plane_wave");
  CHECK(pw.steps == 111);
  CHECK(pw.diagnostics.oracle_comparison);
  CHECK_FALSE(pw.diagnostics.a_track);
  CHECK(code_of([&] { load_config(dir / "unknown.json"); }) == ErrorCode::unknown_scenario);
}

TEST_CASE("every scenario runs and reports") {
  for (const auto& s : list_scenarios()) {
    CAPTURE(s.name);
    ScenarioConfig c = default_config(s.name);
    c.steps = std::min(c.steps, 40);
    c.output_every = 10;
    c.output_dir = scratch("all_" + s.name).string();
    const RunReport r = run_scenario(c);
    CHECK(r.scenario == s.name);
    CHECK(r.steps == c.steps);
    CHECK_FALSE(r.checks.empty());
    CHECK(r.wall_seconds >= 0.0);
    const fs::path out(c.output_dir);
    CHECK(fs::exists(out / (s.name + ".csv")));
    const auto report = nlohmann::json::parse(slurp(out / "report.json"));
    CHECK(report.at("scenario") == s.name);
    CHECK(report.at("passed").get<bool>() == r.passed());
    CHECK(config_from_json(report.at("config")) == c);
    CHECK(report.at("checks").size() == r.checks.size());
  }
}

TEST_CASE("plane-wave run") {
  ScenarioConfig c = default_config("vacuum_plane_wave");
  c.output_dir = scratch("pw").string();
  const RunReport r = run_scenario(c);
  CHECK(r.passed());
  REQUIRE(r.find("lorentz_norm"));
  CHECK(r.find("lorentz_norm")->value < 1e-10);
  REQUIRE(r.find("analytic_error_E"));
  CHECK(r.find("eb_oracle_difference_E"));
  CHECK(r.find("no_such_check") == nullptr);
  CHECK(std::abs(r.energy_drift_slope) < 1e-8 * r.initial_energy);
  const fs::path out(c.output_dir);
  CHECK(first_line(out / "vacuum_plane_wave.csv") == "t,H,lorentz,gauss,divB,faraday,ampere");
  for (const char* f : {"A_0.bin", "Y_0.bin", "eta_0.bin", "W_0.bin", "A_222.bin", "A_222.bin.txt"}) {
    CHECK(fs::exists(out / "snapshots" / f));
  }
  const Snapshot a = read_snapshot(out / "snapshots" / "A_222.bin");
  CHECK(a.name == "A");
  CHECK(a.time == doctest::Approx(222 * c.dt));
  CHECK(a.components == 3);
  CHECK(a.samples.size() == 3u * 16 * 16 * 16);
}

TEST_CASE("particle runs") {
  ScenarioConfig c = default_config("particle_constant_B");
  c.output_dir = scratch("gyro").string();
  const RunReport r = run_scenario(c);
  CHECK(r.passed());
  REQUIRE(r.find("gyroradius_error"));
  CHECK(r.find("gyroradius_error")->value < 1e-6);
  CHECK(first_line(fs::path(c.output_dir) / "particle_constant_B.csv") == "t,q1,q2,q3,p1,p2,p3,y1,H");

  ScenarioConfig j = default_config("particle_nonclosed_field_jacobi");
  j.output_dir = scratch("jacobi").string();
  const RunReport rj = run_scenario(j);
  CHECK(rj.passed());
  CHECK(rj.find("jacobi_cyclic_sum_matches_minus_3y"));

  ScenarioConfig y = default_config("su2_pure_gauge");
  y.output_dir = scratch("ym").string();
  const RunReport ry = run_scenario(y);
  REQUIRE(ry.find("perturbed_ym_residual"));
  CHECK(ry.find("perturbed_ym_residual")->lower_bound);
  CHECK(ry.passed());
}

TEST_CASE("a failing check fails the report") {
  ScenarioConfig c = default_config("vacuum_plane_wave");
  c.dt = 0.14;
  c.steps = 40;
  c.output_dir = scratch("coarse").string();
  const RunReport r = run_scenario(c);
  CHECK_FALSE(r.passed());
  CHECK(r.find("lorentz_norm")->passed);
}

TEST_CASE("identical configs give identical rows") {
  for (const char* name : {"vacuum_random", "sourced_oscillating_charge", "chart_equivalence_su2"}) {
    CAPTURE(name);
    ScenarioConfig c = default_config(name);
    c.steps = std::min(c.steps, 60);
    c.output_dir = scratch(std::string("det_a_") + name).string();
    run_scenario(c);
    const std::string a = slurp(fs::path(c.output_dir) / (std::string(name) + ".csv"));
    c.output_dir = scratch(std::string("det_b_") + name).string();
    run_scenario(c);
    const std::string b = slurp(fs::path(c.output_dir) / (std::string(name) + ".csv"));
    CHECK_FALSE(a.empty());
    CHECK(a == b);
  }
  // a different seed changes random initial data
  ScenarioConfig c = default_config("vacuum_random");
  c.steps = 10;
  c.output_dir = scratch("seed1").string();
  run_scenario(c);
  const std::string a = slurp(fs::path(c.output_dir) / "vacuum_random.csv");
  c.seed = 2;
  c.output_dir = scratch("seed2").string();
  run_scenario(c);
  CHECK(a != slurp(fs::path(c.output_dir) / "vacuum_random.csv"));
}

TEST_CASE("snapshot layout") {
  const GridPtr g = Grid::make({4, 5}, {2.0, 2.5}, Backend::central2);
  const auto f = ScalarField::from_function(g, [](double x, double y, double) { return x + 10 * y; });
  const fs::path dir = scratch("snap");
  fs::create_directories(dir);
  write_snapshot(dir / "f.bin", "phi", f, 0.25);
  const std::string bytes = slurp(dir / "f.bin");
  CHECK(bytes.substr(0, 8) == std::string("MXHSNAP\0", 8));
  CHECK(read_at<std::uint32_t>(bytes, 8) == 1u);
  CHECK(read_at<std::uint32_t>(bytes, 12) == 2u);
  CHECK(read_at<std::uint32_t>(bytes, 16) == 4u);
  CHECK(read_at<std::uint32_t>(bytes, 20) == 5u);
  CHECK(read_at<std::uint32_t>(bytes, 24) == 1u);
  CHECK(read_at<double>(bytes, 28) == 2.0);
  CHECK(read_at<double>(bytes, 36) == 2.5);
  CHECK(read_at<double>(bytes, 44) == 0.0);
  CHECK(read_at<double>(bytes, 52) == 0.25);
  CHECK(read_at<std::uint32_t>(bytes, 60) == 1u);
  CHECK(read_at<std::uint32_t>(bytes, 64) == 3u);
  CHECK(bytes.substr(68, 3) == "phi");
  CHECK(bytes.size() == 71u + 20 * 8);
  // node (i, j) sits at i * ny + j
  const double h0 = 0.5, h1 = 0.5;
  CHECK(read_at<double>(bytes, 71 + 8 * (2 * 5 + 1)) == doctest::Approx(2 * h0 + 10 * h1));

  const Snapshot s = read_snapshot(dir / "f.bin");
  CHECK(s.name == "phi");
  CHECK(s.dim == 2);
  CHECK(s.points == std::array<int, 3>{4, 5, 1});
  CHECK(s.lengths[1] == 2.5);
  CHECK(std::equal(s.samples.begin(), s.samples.end(), f.values().begin(), f.values().end()));
  const std::string meta = slurp(dir / "f.bin.txt");
  CHECK(meta.find("name = phi") != std::string::npos);
  CHECK(meta.find("points = 4 5 1") != std::string::npos);

  VectorField v(g);
  v[2] = f;
  write_snapshot(dir / "v.bin", "v", v, 1.0);
  const Snapshot sv = read_snapshot(dir / "v.bin");
  CHECK(sv.components == 3);
  CHECK(std::equal(f.values().begin(), f.values().end(), sv.samples.begin() + 40));

  std::ofstream(dir / "junk.bin") << "not a snapshot at all, just text";
  CHECK(code_of([&] { read_snapshot(dir / "junk.bin"); }) == ErrorCode::io);
  std::ofstream(dir / "short.bin", std::ios::binary) << bytes.substr(0, 80);
  CHECK(code_of([&] { read_snapshot(dir / "short.bin"); }) == ErrorCode::io);
  CHECK(code_of([&] { read_snapshot(dir / "missing.bin"); }) == ErrorCode::io);
}

TEST_CASE("csv writer") {
  const fs::path dir = scratch("csv");
  fs::create_directories(dir);
  {
    CsvWriter w(dir / "a.csv", {"t", "x"});
    w.row({0.1, 1.0 / 3.0});
    CHECK(code_of([&] { w.row({1.0}); }) == ErrorCode::io);
  }
  std::ifstream in(dir / "a.csv");
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  CHECK(header == "t,x");
  const double x = std::stod(row.substr(row.find(',') + 1));
  CHECK(x == 1.0 / 3.0);
  CHECK(code_of([] { CsvWriter("/nonexistent/dir/a.csv", {"t"}); }) == ErrorCode::io);
}
