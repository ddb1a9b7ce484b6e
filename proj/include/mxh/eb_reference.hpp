#pragma once

// Textbook E-B leapfrog on the collocated grid, used only to cross-check the
// canonical solvers:
//   B(t + dt/2) = B(t - dt/2) - dt curl E(t)
//   E(t + dt)   = E(t) + dt (curl B(t + dt/2) - J(t + dt/2))

#include <array>
#include <utility>

#include "mxh/grid.hpp"
#include "mxh/maxwell.hpp"

namespace mxh {

struct EBState {
  VectorField E;
  VectorField B;
  double time = 0.0;
  /// When set, B is sampled at time - dt_stagger/2.
  bool staggered = false;
  double dt_stagger = 0.0;

  EBState(VectorField E, VectorField B, double time = 0.0);

  const Grid& grid() const { return E.grid(); }
};

/// A collocated state is staggered on its first step by B(-dt/2) = B(0) + dt/2 curl E(0).
EBState step_eb(const EBState& s, const VectorField& J_mid, double dt);

/// B interpolated back to the time of E.
VectorField synchronized_B(const EBState& s);

struct PlaneWave {
  EBState eb;
  ExtendedState extended;
};

/// E = amplitude * pol * cos(k.x), B = k_hat x E, A = (amplitude/omega) * pol * sin(k.x),
/// Y = -E, W = eta = 0. `mode` counts wavelengths per box along each axis.
PlaneWave plane_wave_state(const GridPtr& grid, std::array<int, 3> mode, double amplitude,
                           std::array<double, 3> polarization);

/// Analytic plane-wave fields at time t for the same parameters.
EMFields plane_wave_fields(const GridPtr& grid, std::array<int, 3> mode, double amplitude,
                           std::array<double, 3> polarization, double t);

}  // namespace mxh
