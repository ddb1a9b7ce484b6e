#pragma once

// Canonical Hamiltonian electrodynamics on a periodic grid.
//
// Extended vacuum system: canonical pairs (A, Y) and (eta, W) with
//   H = 1/2 [ |Y - grad W|^2 + |curl A|^2 + |eta|^2 ],
//   dA/dt = Y - grad W,        dY/dt = -curl curl A,
//   deta/dt = div(Y - grad W), dW/dt = -eta.
// The drift of A and eta share the factor Y - grad W, so div(A) - eta is an
// exact invariant of the flow and of the leapfrog drift.
//
// Reduced sourced system: canonical pairs (S, B) and (eta, W) with a
// prescribed longitudinal field F, div F = rho:
//   H = 1/2 [ |curl S + F + grad W|^2 + |B|^2 + |eta|^2 ],
//   dS/dt = B, dB/dt = -curl(curl S + F + grad W),
//   deta/dt = -div(curl S + F + grad W), dW/dt = -eta,
// with the electric field E = curl S + F.

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "mxh/grid.hpp"

namespace mxh {

/// max(1, largest |sample|) over the given fields; tolerances are relative to it.
double field_scale(std::initializer_list<const ScalarField*> scalars, std::initializer_list<const VectorField*> vectors);

/// Largest stable step for the explicit second-order steppers on this grid.
double stable_dt(const Grid& grid);
void require_stable_dt(const Grid& grid, double dt);

struct ExtendedState {
  VectorField A;
  VectorField Y;
  ScalarField eta;
  ScalarField W;
  double time = 0.0;
  bool lorentz_consistent = false;

  /// Checks shared grid and finiteness. When `lorentz_consistent` is set the
  /// constructor also verifies |div A - eta| < 1e-8 * scale.
  ExtendedState(VectorField A, VectorField Y, ScalarField eta, ScalarField W, double time = 0.0,
                bool lorentz_consistent = false);

  /// eta := div A, so the Lorentz residual starts at zero.
  static ExtendedState consistent(VectorField A, VectorField Y, ScalarField W, double time = 0.0);
  static ExtendedState zero(const GridPtr& grid);

  const Grid& grid() const { return A.grid(); }
  const GridPtr& grid_ptr() const { return A.grid_ptr(); }
  /// Y + grad W
  VectorField Y_tilde() const;
  double scale() const;
};

struct ExtendedTangent {
  VectorField dA;
  VectorField dY;
  ScalarField deta;
  ScalarField dW;
};

double hamiltonian_vacuum(const VectorField& A, const VectorField& Y);
double hamiltonian_extended(const ExtendedState& s);
ExtendedTangent rhs_extended(const ExtendedState& s);

/// Kick-drift-kick leapfrog; dt must be positive and within stable_dt.
ExtendedState step_extended(const ExtendedState& s, double dt);
/// Same map without the step-size checks; negative dt runs backwards.
ExtendedState leapfrog_extended(const ExtendedState& s, double dt);

/// Repeated leapfrog steps that carry curl_curl(A) from one step to the
/// next. Produces the same states, bit for bit, as chaining step_extended.
class ExtendedStepper {
 public:
  /// Checks dt against the stability bound.
  ExtendedStepper(ExtendedState initial, double dt);

  void step();
  const ExtendedState& state() const { return s_; }
  double dt() const { return dt_; }

 private:
  ExtendedState s_;
  VectorField force_;
  double dt_;
};

struct EMFields {
  VectorField E;
  VectorField B;
};

/// E = -Y, B = curl A.
EMFields fields_from_extended(const ExtendedState& s);
/// A -> A + grad psi; Y, eta and W untouched.
ExtendedState gauge_transform(const ExtendedState& s, const ScalarField& psi);
/// -div Y, the Gauss-law charge density div E.
ScalarField momentum_map(const ExtendedState& s);
/// div A - eta
ScalarField lorentz_residual(const ExtendedState& s);
/// Canonical two-form (dY ^ dA) + (dW ^ deta) evaluated on two tangent vectors.
double canonical_pairing(const ExtendedState& d1, const ExtendedState& d2);

/// Charge and current producers satisfying neutrality and continuity.
class SourceSpec {
 public:
  using ScalarProducer = std::function<ScalarField(double)>;
  using VectorProducer = std::function<VectorField(double)>;

  /// Validates zero mean of rho and |d rho/dt + div J| < 1e-6 * scale by
  /// centered differences at the given sample times.
  SourceSpec(GridPtr grid, ScalarProducer rho, VectorProducer J, std::vector<double> check_times = {0.0, 0.37, 1.3});

  static SourceSpec vacuum(const GridPtr& grid);
  static SourceSpec static_charge(const ScalarField& rho);
  /// J = grad(inv_laplacian(-d rho/dt)) + transverse, which satisfies the
  /// discrete continuity equation exactly on this grid.
  static SourceSpec from_charge(GridPtr grid, ScalarProducer rho, ScalarProducer drho_dt,
                                VectorProducer transverse_current = {});

  ScalarField rho(double t) const { return rho_(t); }
  VectorField J(double t) const { return J_(t); }
  const GridPtr& grid_ptr() const { return grid_; }

 private:
  GridPtr grid_;
  ScalarProducer rho_;
  VectorProducer J_;
};

struct ReducedState {
  VectorField S;
  VectorField B;
  ScalarField eta;
  ScalarField W;
  VectorField F;
  double time = 0.0;
  /// Diagnostic vector potential, dA/dt = -E - grad W. Never feeds back.
  std::optional<VectorField> A;

  const Grid& grid() const { return S.grid(); }
  const GridPtr& grid_ptr() const { return S.grid_ptr(); }
  double scale() const;
};

struct ReducedTangent {
  VectorField dS;
  VectorField dB;
  ScalarField deta;
  ScalarField dW;
};

/// F = grad(inv_laplacian(rho)), the curl-free field with div F = rho.
VectorField init_F_from_charge(const ScalarField& rho);
/// curl S + F
VectorField electric_field(const ReducedState& s);
double hamiltonian_reduced(const ReducedState& s);
ReducedTangent rhs_reduced(const ReducedState& s);

/// Builds a reduced state from charge data at time t: F from rho, S from B
/// via inv_curl, and, when `with_A_track` is set, A = S + grad(inv_laplacian(eta))
/// so that div A = eta initially.
ReducedState make_reduced_state(const ScalarField& rho, const VectorField& B, const ScalarField& W,
                                const ScalarField& eta, double time, bool with_A_track);

/// Strang splitting: half kick of the curl part, drift of the kinetic part,
/// F advanced by the midpoint rule on dF/dt = -J, half kick. F is then
/// nudged by a gradient so that div F matches rho at the new time.
ReducedState step_reduced(const ReducedState& s, const SourceSpec& src, double dt);

VectorField reconstruct_S_from_B(const VectorField& B);

struct MaxwellResiduals {
  double faraday = 0.0;
  double ampere = 0.0;
  double gauss = 0.0;
  double divB = 0.0;
};

/// RMS norms of the four Maxwell equations between two snapshots dt apart,
/// curls evaluated on midpoint averages. rho is taken at the later snapshot
/// and J at the midpoint time.
MaxwellResiduals maxwell_residuals(const VectorField& E, const VectorField& B, const ScalarField& rho,
                                   const VectorField& J, const VectorField& E_prev, const VectorField& B_prev,
                                   double dt);

struct WaveResiduals {
  double scalar = 0.0;  // d2W/dt2 - lap W - rho
  double vector = 0.0;  // d2A/dt2 - lap A - J
};

/// Centered second differences over three consecutive states dt apart.
WaveResiduals wave_residuals(const ReducedState& prev, const ReducedState& mid, const ReducedState& next,
                             const SourceSpec& src);

}  // namespace mxh
