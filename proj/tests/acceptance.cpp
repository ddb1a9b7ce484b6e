// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
//
//   acceptance            all criteria
//   acceptance 3 7        only the listed ones

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Geometry>

#include "mxh/eb_reference.hpp"
#include "mxh/gauge.hpp"
#include "mxh/grid.hpp"
#include "mxh/initial_data.hpp"
#include "mxh/maxwell.hpp"

using namespace mxh;
namespace gg = mxh::gauge;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * kPi;

struct Outcome {
  bool pass;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

GridPtr cube(int n, Backend b) { return Grid::make({n, n, n}, {kTwoPi, kTwoPi, kTwoPi}, b); }

const char* name(Backend b) { return b == Backend::spectral ? "spectral" : "central2"; }

ExtendedState random_vacuum(const GridPtr& g, std::uint64_t seed) {
  return ExtendedState::consistent(random_band_limited_vector(g, 2, seed), random_band_limited_vector(g, 2, seed + 1),
                                   random_band_limited(g, 2, seed + 2));
}

VectorField transverse(const VectorField& v) { return v - grad(inv_laplacian(div(v))); }

double rel_l2_pair(const VectorField& E, const VectorField& B, const VectorField& E_ref, const VectorField& B_ref) {
  const VectorField dE = E - E_ref, dB = B - B_ref;
  return std::sqrt((inner(dE, dE) + inner(dB, dB)) / (inner(E_ref, E_ref) + inner(B_ref, B_ref)));
}

// ---------------------------------------------------------------------------

Outcome lorentz_conservation() {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  std::string detail;
  for (Backend b : {Backend::spectral, Backend::central2}) {
    const GridPtr g = cube(32, b);
    const ExtendedState init = random_vacuum(g, 101);
    const double scale = init.scale();
    ExtendedStepper stepper(init, 0.2 * g->spacing(0));
    double worst = 0.0;
    for (int n = 0; n < 10000; ++n) {
      stepper.step();
      worst = std::max(worst, max_abs(lorentz_residual(stepper.state())));
    }
    ok = ok && worst < 1e-10 * scale;
    detail += fmt("%s max|divA-eta| = %.2e (limit %.1e); ", name(b), worst, 1e-10 * scale);
  }
  const double wall = seconds_since(t0);
  ok = ok && wall < 120.0;
  return {ok, detail + fmt("wall %.1f s (limit 120 s)", wall)};
}

Outcome energy_behavior() {
  bool ok = true;
  std::string detail;
  for (Backend b : {Backend::spectral, Backend::central2}) {
    const GridPtr g = cube(32, b);
    const ExtendedState init = random_vacuum(g, 101);
    const double H0 = hamiltonian_extended(init);
    ExtendedStepper stepper(init, 0.1 * g->spacing(0));
    std::vector<double> n_s{0.0}, H_s{H0};
    for (int n = 1; n <= 10000; ++n) {
      stepper.step();
      if (n % 10 == 0) {
        n_s.push_back(n);
        H_s.push_back(hamiltonian_extended(stepper.state()));
      }
    }
    double band = 0.0;
    for (double h : H_s) band = std::max(band, std::abs(h - H0));
    // least-squares slope of H against the step index
    const double nbar = std::accumulate(n_s.begin(), n_s.end(), 0.0) / n_s.size();
    const double hbar = std::accumulate(H_s.begin(), H_s.end(), 0.0) / H_s.size();
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < n_s.size(); ++i) {
      sxy += (n_s[i] - nbar) * (H_s[i] - hbar);
      sxx += (n_s[i] - nbar) * (n_s[i] - nbar);
    }
    const double slope = sxy / sxx;
    ok = ok && band < 1e-3 * H0 && std::abs(slope) < 1e-8 * H0;
    detail += fmt("%s band/H0 = %.2e, |slope|/H0 = %.2e per step; ", name(b), band / H0, std::abs(slope) / H0);
  }
  return {ok, detail + "limits 1e-3 and 1e-8"};
}

Outcome plane_wave_accuracy() {
  const GridPtr g = cube(16, Backend::spectral);
  const Eigen::Vector3d k(1.0, 1.0, 0.0);
  const double omega = k.norm();
  const Eigen::Vector3d pol = Eigen::Vector3d(1.0, -1.0, 0.0).normalized();
  const Eigen::Vector3d bdir = k.normalized().cross(pol);
  const double period = kTwoPi / omega;
  const int steps = 2000;
  ExtendedStepper stepper(plane_wave_state(g, {1, 1, 0}, 1.0, {1.0, -1.0, 0.0}).extended, period / steps);
  for (int n = 0; n < steps; ++n) stepper.step();
  const double t = stepper.state().time;
  auto wave = [&](const Eigen::Vector3d& dir) {
    return VectorField::from_function(g, [&](double x, double y, double z) {
      const double c = std::cos(k(0) * x + k(1) * y + k(2) * z - omega * t);
      return std::array<double, 3>{c * dir(0), c * dir(1), c * dir(2)};
    });
  };
  const EMFields f = fields_from_extended(stepper.state());
  const double err = rel_l2_pair(f.E, f.B, wave(pol), wave(bdir));
  return {err < 1e-4, fmt("relative L2 error after one period = %.2e (limit 1e-4), t = %.6f, T = %.6f", err, t, period)};
}

Outcome oracle_equivalence() {
  bool ok = true;
  std::string detail;
  for (Backend b : {Backend::spectral, Backend::central2}) {
    const GridPtr g = cube(32, b);
    const VectorField A = transverse(random_band_limited_vector(g, 2, 201));
    const VectorField Y = transverse(random_band_limited_vector(g, 2, 202));
    const double dt = 0.1 * g->spacing(0);
    ExtendedStepper ext(ExtendedState::consistent(A, Y, ScalarField(g)), dt);
    const EMFields f0 = fields_from_extended(ext.state());
    EBState eb(f0.E, f0.B);
    const VectorField J(g);
    for (int n = 0; n < 100; ++n) {
      ext.step();
      eb = step_eb(eb, J, dt);
    }
    const EMFields f = fields_from_extended(ext.state());
    const double diff = rel_l2_pair(eb.E, synchronized_B(eb), f.E, f.B);
    ok = ok && diff < 1e-3;
    detail += fmt("%s relative L2 difference = %.2e; ", name(b), diff);
  }
  return {ok, detail + "limit 1e-3"};
}

Outcome sourced_recovery() {
  const GridPtr g = cube(32, Backend::spectral);
  const double q0 = 1.0, Omega = 1.0;
  // a positive and a negative lobe along x, localized in y and z
  const auto shape = ScalarField::from_function(g, [](double x, double y, double z) {
    return std::sin(x) * (1.0 + std::cos(y)) * (1.0 + std::cos(z)) / 4.0;
  });
  const SourceSpec src = SourceSpec::from_charge(
      g, [=](double t) { return (q0 * std::cos(Omega * t)) * shape; },
      [=](double t) { return (-q0 * Omega * std::sin(Omega * t)) * shape; });
  const ScalarField rho0 = src.rho(0.0);
  ReducedState s = make_reduced_state(rho0, VectorField(g), -inv_laplacian(rho0), ScalarField(g), 0.0, true);
  const double scale = s.scale();
  const double dt = 0.05 * g->spacing(0);
  double gauss = 0, divB = 0, faraday = 0, ampere = 0, wave_s = 0, wave_v = 0;
  ReducedState prev = s;
  for (int n = 1; n <= 2000; ++n) {
    ReducedState next = step_reduced(s, src, dt);
    if (n % 10 == 0 || n == 2000) {
      const VectorField E0 = electric_field(s), E1 = electric_field(next);
      // Gauss law checked against the prescribed charge, not the stepper's F
      gauss = std::max(gauss, rms(div(E1) - src.rho(next.time)));
      divB = std::max(divB, rms(div(next.B)));
      const auto r = maxwell_residuals(E1, next.B, src.rho(next.time), src.J(s.time + 0.5 * dt), E0, s.B, dt);
      faraday = std::max(faraday, r.faraday);
      ampere = std::max(ampere, r.ampere);
      const auto w = wave_residuals(prev, s, next, src);
      wave_s = std::max(wave_s, w.scalar);
      wave_v = std::max(wave_v, w.vector);
    }
    prev = std::move(s);
    s = std::move(next);
  }
  const bool ok = gauss < 1e-8 * scale && divB < 1e-10 * scale && faraday < 1e-3 * scale && ampere < 1e-3 * scale &&
                  wave_s < 1e-3 * scale && wave_v < 1e-3 * scale;
  return {ok, fmt("gauss %.1e, divB %.1e, faraday %.1e, ampere %.1e, wave W %.1e, wave A %.1e (scale %.2f)", gauss,
                  divB, faraday, ampere, wave_s, wave_v, scale)};
}

Outcome static_equilibrium() {
  bool ok = true;
  std::string detail;
  for (Backend b : {Backend::spectral, Backend::central2}) {
    const GridPtr g = cube(32, b);
    const ScalarField rho = random_band_limited(g, 2, 301);
    const ScalarField phi = inv_laplacian(rho);
    const ReducedState s0{VectorField(g), VectorField(g), ScalarField(g), -1.0 * phi, grad(phi), 0.0, std::nullopt};
    const double scale = s0.scale();
    const SourceSpec src = SourceSpec::static_charge(rho);
    const double dt = 0.2 * g->spacing(0);
    ReducedState s = s0;
    double worst = 0.0;
    for (int n = 0; n < 1000; ++n) {
      s = step_reduced(s, src, dt);
      worst = std::max({worst, max_abs(s.S - s0.S), max_abs(s.B - s0.B), max_abs(s.eta - s0.eta),
                        max_abs(s.W - s0.W), max_abs(s.F - s0.F)});
    }
    ok = ok && worst < 1e-12 * scale;
    detail += fmt("%s deviation = %.2e; ", name(b), worst);
  }
  return {ok, detail + "limit 1e-12 * scale"};
}

Outcome gyromotion() {
  const double b = 1.0, charge = 1.0, Omega = charge * b;
  const gg::PoissonStructure P = gg::twisted_structure(gg::constant_abelian_field(0, 0, b), gg::LieAlgebra::abelian(1));
  gg::Vec q(3), p(3), u(1), y(1);
  q << 0.2, -0.1, 0.0;
  p << 0.3, 0.4, 0.2;
  u << 0.0;
  y << charge;
  const gg::PhasePoint z0{q, p, u, y};
  const double T = kTwoPi / Omega;
  const auto tr = gg::integrate_particle(gg::free_kinetic_energy(3, 1), P, z0, T / 1000, 10000);
  const double cx = q(0) + p(1) / Omega, cy = q(1) - p(0) / Omega;
  const double r0 = std::hypot(p(0), p(1)) / std::abs(Omega);
  const double H0 = 0.5 * p.squaredNorm();
  double radius_err = 0.0, energy_err = 0.0;
  for (std::size_t s = 0; s < tr.z.size(); ++s) {
    radius_err = std::max(radius_err, std::abs(std::hypot(tr.z[s](0) - cx, tr.z[s](1) - cy) - r0));
    energy_err = std::max(energy_err, std::abs(0.5 * tr.z[s].segment(3, 3).squaredNorm() - H0));
  }
  return {radius_err < 1e-6 && energy_err < 1e-8 * H0,
          fmt("radius error %.2e (limit 1e-6), energy drift %.2e H0 (limit 1e-8)", radius_err, energy_err / H0)};
}

double worst_jacobi(const gg::PoissonStructure& P, const gg::Vec& z, const std::vector<int>& idx) {
  double worst = 0.0;
  for (std::size_t a = 0; a < idx.size(); ++a)
    for (std::size_t b = a + 1; b < idx.size(); ++b)
      for (std::size_t c = b + 1; c < idx.size(); ++c)
        worst = std::max(worst, std::abs(gg::jacobi_residual(P, z, idx[a], idx[b], idx[c])));
  return worst;
}

gg::Vec random_point(std::mt19937_64& rng, int size) {
  std::uniform_real_distribution<double> d(-2.0, 2.0);
  gg::Vec v(size);
  for (int i = 0; i < size; ++i) v(i) = d(rng);
  return v;
}

std::vector<int> range(int n) {
  std::vector<int> v(n);
  for (int i = 0; i < n; ++i) v[i] = i;
  return v;
}

Outcome jacobi_diagnostics() {
  std::mt19937_64 rng(8);
  const gg::PoissonStructure canon = gg::canonical_structure(3, gg::LieAlgebra::abelian(1));
  const gg::PoissonStructure canon_su2 = gg::canonical_structure(3, gg::LieAlgebra::su2());
  const std::vector<int> no_u{0, 1, 2, 3, 4, 5, 9, 10, 11};
  double canonical = 0.0;
  for (int n = 0; n < 100; ++n) {
    canonical = std::max(canonical, worst_jacobi(canon, random_point(rng, canon.size()), range(canon.size())));
    canonical = std::max(canonical, worst_jacobi(canon_su2, random_point(rng, canon_su2.size()), no_u));
  }

  const gg::GaugeField wavy = gg::GaugeField::from_potential(3, 1, [](const gg::Vec& q) {
    gg::Mat a(1, 3);
    a << std::sin(q(1)) * q(2), std::cos(q(0) + 0.5 * q(2)), q(0) * q(1);
    return a;
  });
  const gg::PoissonStructure tw = gg::twisted_structure(wavy, gg::LieAlgebra::abelian(1));
  double potential = 0.0;
  for (int n = 0; n < 100; ++n) potential = std::max(potential, worst_jacobi(tw, random_point(rng, tw.size()), range(8)));

  const gg::PoissonStructure direct = gg::twisted_structure(gg::nonclosed_abelian_field(), gg::LieAlgebra::abelian(1));
  double direct_err = 0.0;
  for (int n = 0; n < 100; ++n) {
    const gg::Vec z = random_point(rng, direct.size());
    direct_err = std::max(direct_err, std::abs(gg::jacobi_residual(direct, z, 3, 4, 5) + 3.0 * z(7)));
  }
  return {canonical < 1e-10 && potential < 1e-8 && direct_err < 1e-6,
          fmt("canonical %.1e (limit 1e-10), potential field %.1e (limit 1e-8), |(p1,p2,p3) + 3y| %.1e (limit 1e-6)",
              canonical, potential, direct_err)};
}

Outcome yang_mills() {
  const gg::LieAlgebra su2 = gg::LieAlgebra::su2();
  const gg::GaugeField flat = gg::su2_pure_gauge_field();
  const gg::GaugeField pert = gg::su2_perturbed_field(0.5);
  std::mt19937_64 rng(9);
  double flat_worst = 0.0, pert_best = 0.0;
  for (int n = 0; n < 50; ++n) {
    const gg::Vec q = random_point(rng, 3);
    flat_worst = std::max(flat_worst, gg::ym_field_residual(flat, su2, q).max_abs());
    pert_best = std::max(pert_best, gg::ym_field_residual(pert, su2, q).max_abs());
  }
  return {flat_worst < 1e-6 && pert_best > 0.1,
          fmt("flat max %.1e (limit 1e-6), perturbed max %.2f (needs > 0.1)", flat_worst, pert_best)};
}

// Integrates both charts directly and compares in the twisted chart.
double chart_gap(const gg::GaugeField& field, const gg::LieAlgebra& alg, const gg::PhasePoint& z0, double dt, int steps) {
  const int n = z0.n(), m = z0.m();
  const gg::Observable H = gg::free_kinetic_energy(n, m);
  const auto tw = gg::integrate_particle(H, gg::twisted_structure(field, alg), z0, dt, steps);
  // kinetic energy in the canonical chart: |p~ - y.A(q)|^2 / 2
  const gg::Observable Hc{[&field, n, m](const gg::Vec& z) {
                            const gg::Vec v = z.segment(n, n) - field.potential(z.segment(0, n)).transpose() *
                                                                    z.segment(2 * n + m, m);
                            return 0.5 * v.squaredNorm();
                          },
                          {}};
  gg::PhasePoint c0 = z0;
  c0.p = z0.p + field.potential(z0.q).transpose() * z0.y;
  c0.chart = gg::Chart::canonical;
  const auto can = gg::integrate_particle(Hc, gg::canonical_structure(n, alg), c0, dt, steps);
  double worst = 0.0;
  for (std::size_t s = 0; s < tw.z.size(); ++s) {
    gg::Vec back = can.z[s];
    back.segment(n, n) -= field.potential(back.segment(0, n)).transpose() * back.segment(2 * n + m, m);
    worst = std::max(worst, (back - tw.z[s]).cwiseAbs().maxCoeff());
  }
  return worst;
}

Outcome chart_equivalence() {
  gg::Vec q(3), p(3), u1(1), y1(1);
  q << 0.1, 0.2, -0.1;
  p << 0.3, 0.4, 0.2;
  u1 << 0.0;
  y1 << 1.0;
  const double abelian = chart_gap(gg::constant_abelian_potential(1.0, true), gg::LieAlgebra::abelian(1),
                                   gg::PhasePoint{q, p, u1, y1}, kTwoPi / 1000, 10000);
  gg::Vec qs(3), ps(3), us(3), ys(3);
  qs << 0.3, -0.2, 0.5;
  ps << 0.4, 0.1, -0.3;
  us << 0.0, 0.0, 0.0;
  ys << 0.7, -0.4, 0.5;
  const double su2 = chart_gap(gg::su2_smooth_field(), gg::LieAlgebra::su2(), gg::PhasePoint{qs, ps, us, ys}, 1e-3, 1000);
  return {abelian < 1e-8 && su2 < 1e-6,
          fmt("constant B over 10 periods %.1e (limit 1e-8), su(2) over 1000 steps %.1e (limit 1e-6)", abelian, su2)};
}

Outcome ad_invariance() {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> d(-2.0, 2.0);
  int mismatches = 0, cases = 0;
  auto record = [&](bool table, bool brute, bool expected) {
    ++cases;
    if (table != brute || table != expected) ++mismatches;
  };

  // so(3): coadjoint action is rotation of the vector
  std::vector<Eigen::Matrix3d> rotations;
  for (int n = 0; n < 10; ++n) {
    const Eigen::Vector3d axis = Eigen::Vector3d(d(rng), d(rng), d(rng)).normalized();
    rotations.push_back(Eigen::AngleAxisd(d(rng), axis).toRotationMatrix());
  }
  std::vector<Eigen::Vector3d> so3_xi{Eigen::Vector3d::Zero(), Eigen::Vector3d::UnitX(), Eigen::Vector3d::UnitY(),
                                      Eigen::Vector3d::UnitZ()};
  for (int n = 0; n < 20; ++n) so3_xi.emplace_back(d(rng), d(rng), d(rng));
  for (const auto& e : so3_xi) {
    bool brute = true;
    for (const auto& R : rotations) brute = brute && (R * e - e).cwiseAbs().maxCoeff() < 1e-12;
    record(gg::ad_invariance_check(gg::LieAlgebra::so3(), {gg::Vec(e)}).invariant, brute, e.isZero());
  }

  // abelian: the group acts trivially
  for (int n = 0; n < 20; ++n) {
    gg::Vec e = random_point(rng, 3);
    record(gg::ad_invariance_check(gg::LieAlgebra::abelian(3), {e}).invariant, true, true);
  }

  // affine group of the line, g = [[a, b], [0, 1]], basis diag(1, 0) and E_12
  Eigen::Matrix2d a1, a2;
  a1 << 1, 0, 0, 0;
  a2 << 0, 1, 0, 0;
  std::vector<Eigen::Matrix2d> group;
  for (int n = 0; n < 10; ++n) {
    Eigen::Matrix2d g;
    g << std::exp(d(rng)), d(rng), 0, 1;
    group.push_back(g);
  }
  std::vector<Eigen::Vector2d> aff_xi{{1, 0}, {-3, 0}, {0, 0}, {0, 1}, {1, 1}};
  for (int n = 0; n < 20; ++n) aff_xi.emplace_back(d(rng), n % 2 ? 0.0 : d(rng));
  for (const auto& e : aff_xi) {
    bool brute = true;
    for (const auto& g : group)
      for (const Eigen::Matrix2d& X : {a1, a2}) {
        const Eigen::Matrix2d moved = g * X * g.inverse();
        const double before = e(0) * X(0, 0) + e(1) * X(0, 1);
        const double after = e(0) * moved(0, 0) + e(1) * moved(0, 1);
        brute = brute && std::abs(after - before) < 1e-12;
      }
    record(gg::ad_invariance_check(gg::LieAlgebra::affine2(), {gg::Vec(e)}).invariant, brute, e(1) == 0.0);
  }
  return {mismatches == 0, fmt("%d of %d elements disagree with the group action", mismatches, cases)};
}

struct Criterion {
  int id;
  const char* title;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "Lorentz-condition conservation", lorentz_conservation},
      {2, "energy behavior", energy_behavior},
      {3, "plane-wave accuracy", plane_wave_accuracy},
      {4, "E-B oracle equivalence", oracle_equivalence},
      {5, "sourced Maxwell recovery", sourced_recovery},
      {6, "static equilibrium", static_equilibrium},
      {7, "gyromotion", gyromotion},
      {8, "Jacobi diagnostics", jacobi_diagnostics},
      {9, "Yang-Mills residuals", yang_mills},
      {10, "minimal-coupling chart equivalence", chart_equivalence},
      {11, "coadjoint invariance table", ad_invariance},
  };
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));

  const auto t0 = std::chrono::steady_clock::now();
  int failures = 0;
  for (const auto& c : all) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), c.id) == selected.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("%s [%d] %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.title, o.detail.c_str(),
                seconds_since(start));
    std::fflush(stdout);
  }
  std::printf("total %.1f s, %d failed\n", seconds_since(t0), failures);
  return failures == 0 ? 0 : 1;
}
