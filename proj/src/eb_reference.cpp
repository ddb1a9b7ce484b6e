#include "mxh/eb_reference.hpp"

#include <cmath>
#include <numbers>

namespace mxh {

EBState::EBState(VectorField E_, VectorField B_, double time_) : E(std::move(E_)), B(std::move(B_)), time(time_) {
  require_same_grid(E.grid(), B.grid());
  const double scale = field_scale({}, {&E, &B});
  const double divB = max_abs(div(B));
  if (divB > 1e-8 * scale) {
    throw Error(ErrorCode::constraint_violation, "initial B is not divergence-free");
  }
}

EBState step_eb(const EBState& s, const VectorField& J_mid, double dt) {
  require_stable_dt(s.grid(), dt);
  require_same_grid(s.grid(), J_mid.grid());
  EBState out = s;
  if (!s.staggered) {
    out.B.add_scaled(0.5 * dt, curl(s.E));
  } else if (std::abs(s.dt_stagger - dt) > 1e-12 * dt) {
    throw Error(ErrorCode::step_size, "staggered E-B state must keep a fixed dt");
  }
  out.B.add_scaled(-dt, curl(s.E));
  VectorField rhs = curl(out.B);
  rhs -= J_mid;
  out.E.add_scaled(dt, rhs);
  out.time = s.time + dt;
  out.staggered = true;
  out.dt_stagger = dt;
  return out;
}

VectorField synchronized_B(const EBState& s) {
  if (!s.staggered) return s.B;
  VectorField b = s.B;
  b.add_scaled(-0.5 * s.dt_stagger, curl(s.E));
  return b;
}

namespace {

struct WaveGeometry {
  std::array<double, 3> k{};
  double omega = 0.0;
  std::array<double, 3> pol{};
  std::array<double, 3> khat_cross_pol{};
};

WaveGeometry plane_wave_geometry(const Grid& grid, std::array<int, 3> mode, std::array<double, 3> polarization) {
  WaveGeometry g;
  double k2 = 0.0;
  for (int a = 0; a < 3; ++a) {
    if (a >= grid.dim() && mode[a] != 0) {
      throw Error(ErrorCode::invalid_polarization, "wave vector has a component along an absent axis");
    }
    g.k[a] = a < grid.dim() ? 2.0 * std::numbers::pi * mode[a] / grid.lengths()[a] : 0.0;
    k2 += g.k[a] * g.k[a];
  }
  if (k2 == 0.0) throw Error(ErrorCode::invalid_polarization, "wave vector must be nonzero");
  g.omega = std::sqrt(k2);
  const double pnorm = std::sqrt(polarization[0] * polarization[0] + polarization[1] * polarization[1] +
                                 polarization[2] * polarization[2]);
  if (pnorm == 0.0) throw Error(ErrorCode::invalid_polarization, "polarization must be nonzero");
  for (int a = 0; a < 3; ++a) g.pol[a] = polarization[a] / pnorm;
  const double kdotp = g.k[0] * g.pol[0] + g.k[1] * g.pol[1] + g.k[2] * g.pol[2];
  if (std::abs(kdotp) > 1e-12 * g.omega) {
    throw Error(ErrorCode::invalid_polarization, "polarization must be orthogonal to the wave vector");
  }
  const std::array<double, 3> kh{g.k[0] / g.omega, g.k[1] / g.omega, g.k[2] / g.omega};
  g.khat_cross_pol = {kh[1] * g.pol[2] - kh[2] * g.pol[1], kh[2] * g.pol[0] - kh[0] * g.pol[2],
                      kh[0] * g.pol[1] - kh[1] * g.pol[0]};
  return g;
}

double phase(const WaveGeometry& g, double x, double y, double z, double t) {
  return g.k[0] * x + g.k[1] * y + g.k[2] * z - g.omega * t;
}

}  // namespace

EMFields plane_wave_fields(const GridPtr& grid, std::array<int, 3> mode, double amplitude,
                           std::array<double, 3> polarization, double t) {
  const WaveGeometry g = plane_wave_geometry(*grid, mode, polarization);
  auto E = VectorField::from_function(grid, [&](double x, double y, double z) {
    const double c = amplitude * std::cos(phase(g, x, y, z, t));
    return std::array<double, 3>{c * g.pol[0], c * g.pol[1], c * g.pol[2]};
  });
  auto B = VectorField::from_function(grid, [&](double x, double y, double z) {
    const double c = amplitude * std::cos(phase(g, x, y, z, t));
    return std::array<double, 3>{c * g.khat_cross_pol[0], c * g.khat_cross_pol[1], c * g.khat_cross_pol[2]};
  });
  return EMFields{std::move(E), std::move(B)};
}

PlaneWave plane_wave_state(const GridPtr& grid, std::array<int, 3> mode, double amplitude,
                           std::array<double, 3> polarization) {
  const WaveGeometry g = plane_wave_geometry(*grid, mode, polarization);
  EMFields f = plane_wave_fields(grid, mode, amplitude, polarization, 0.0);
  auto A = VectorField::from_function(grid, [&](double x, double y, double z) {
    const double s = amplitude / g.omega * std::sin(phase(g, x, y, z, 0.0));
    return std::array<double, 3>{s * g.pol[0], s * g.pol[1], s * g.pol[2]};
  });
  VectorField Y = -f.E;
  ExtendedState ext = ExtendedState::consistent(std::move(A), std::move(Y), ScalarField(grid));
  return PlaneWave{EBState(std::move(f.E), std::move(f.B)), std::move(ext)};
}

}  // namespace mxh
