#include "mxh/maxwell.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mxh {

namespace {

std::string sci(double x) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << x;
  return os.str();
}

// Fraction of the exact leapfrog stability limit 2 / omega_max.
constexpr double kStabilitySafety = 0.9;

}  // namespace

double field_scale(std::initializer_list<const ScalarField*> scalars,
                   std::initializer_list<const VectorField*> vectors) {
  double s = 1.0;
  for (const auto* f : scalars) s = std::max(s, max_abs(*f));
  for (const auto* f : vectors) s = std::max(s, max_abs(*f));
  return s;
}

double stable_dt(const Grid& grid) { return kStabilitySafety * 2.0 / grid.max_frequency(); }

void require_stable_dt(const Grid& grid, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw Error(ErrorCode::step_size, "dt must be positive, got " + sci(dt));
  }
  const double bound = stable_dt(grid);
  if (dt > bound) {
    throw Error(ErrorCode::step_size, "dt = " + sci(dt) + " exceeds the stability bound " + sci(bound) + " (" +
                                          sci(bound / grid.min_spacing()) + " * h)");
  }
}

// ---------------------------------------------------------------------------
// Extended vacuum system

ExtendedState::ExtendedState(VectorField A_, VectorField Y_, ScalarField eta_, ScalarField W_, double time_,
                             bool lorentz_consistent_)
    : A(std::move(A_)),
      Y(std::move(Y_)),
      eta(std::move(eta_)),
      W(std::move(W_)),
      time(time_),
      lorentz_consistent(lorentz_consistent_) {
  require_same_grid(A.grid(), Y.grid());
  require_same_grid(A.grid(), eta.grid());
  require_same_grid(A.grid(), W.grid());
  require_finite(A, "A");
  require_finite(Y, "Y");
  require_finite(eta, "eta");
  require_finite(W, "W");
  if (lorentz_consistent) {
    const double r = max_abs(lorentz_residual(*this));
    if (r > 1e-8 * scale()) {
      throw Error(ErrorCode::constraint_violation, "state flagged Lorentz-consistent has max |div A - eta| = " + sci(r));
    }
  }
}

ExtendedState ExtendedState::consistent(VectorField A, VectorField Y, ScalarField W, double time) {
  ScalarField eta = div(A);
  return ExtendedState(std::move(A), std::move(Y), std::move(eta), std::move(W), time, true);
}

ExtendedState ExtendedState::zero(const GridPtr& grid) {
  return ExtendedState(VectorField(grid), VectorField(grid), ScalarField(grid), ScalarField(grid), 0.0, true);
}

VectorField ExtendedState::Y_tilde() const { return Y + grad(W); }

double ExtendedState::scale() const { return field_scale({&eta, &W}, {&A, &Y}); }

double hamiltonian_vacuum(const VectorField& A, const VectorField& Y) {
  require_same_grid(A.grid(), Y.grid());
  const VectorField B = curl(A);
  const ScalarField d = div(A);
  return 0.5 * (inner(Y, Y) + inner(B, B) + inner(d, d));
}

double hamiltonian_extended(const ExtendedState& s) {
  const VectorField kinetic = s.Y - grad(s.W);
  const VectorField B = curl(s.A);
  return 0.5 * (inner(kinetic, kinetic) + inner(B, B) + inner(s.eta, s.eta));
}

ExtendedTangent rhs_extended(const ExtendedState& s) {
  VectorField velocity = s.Y - grad(s.W);
  ScalarField deta = div(velocity);
  return ExtendedTangent{std::move(velocity), -curl_curl(s.A), std::move(deta), -s.eta};
}

ExtendedState leapfrog_extended(const ExtendedState& s, double dt) {
  const double half = 0.5 * dt;
  VectorField Y = s.Y;
  ScalarField W = s.W;
  Y.add_scaled(-half, curl_curl(s.A));
  W.add_scaled(-half, s.eta);

  const VectorField velocity = Y - grad(W);
  VectorField A = s.A;
  ScalarField eta = s.eta;
  A.add_scaled(dt, velocity);
  eta.add_scaled(dt, div(velocity));

  Y.add_scaled(-half, curl_curl(A));
  W.add_scaled(-half, eta);

  ExtendedState out = s;
  out.A = std::move(A);
  out.Y = std::move(Y);
  out.eta = std::move(eta);
  out.W = std::move(W);
  out.time = s.time + dt;
  return out;
}

ExtendedState step_extended(const ExtendedState& s, double dt) {
  require_stable_dt(s.grid(), dt);
  return leapfrog_extended(s, dt);
}

ExtendedStepper::ExtendedStepper(ExtendedState initial, double dt)
    : s_(std::move(initial)), force_(curl_curl(s_.A)), dt_(dt) {
  require_stable_dt(s_.grid(), dt);
}

void ExtendedStepper::step() {
  const double half = 0.5 * dt_;
  s_.Y.add_scaled(-half, force_);
  s_.W.add_scaled(-half, s_.eta);
  const VectorField velocity = s_.Y - grad(s_.W);
  s_.A.add_scaled(dt_, velocity);
  s_.eta.add_scaled(dt_, div(velocity));
  force_ = curl_curl(s_.A);
  s_.Y.add_scaled(-half, force_);
  s_.W.add_scaled(-half, s_.eta);
  s_.time += dt_;
}

EMFields fields_from_extended(const ExtendedState& s) { return EMFields{-s.Y, curl(s.A)}; }

ExtendedState gauge_transform(const ExtendedState& s, const ScalarField& psi) {
  require_same_grid(s.grid(), psi.grid());
  ExtendedState out = s;
  out.A += grad(psi);
  // The residual shifts by laplacian(psi), so the flag only survives harmonic psi.
  out.lorentz_consistent = s.lorentz_consistent && max_abs(laplacian(psi)) <= 1e-8 * s.scale();
  return out;
}

ScalarField momentum_map(const ExtendedState& s) { return -div(s.Y); }

ScalarField lorentz_residual(const ExtendedState& s) { return div(s.A) - s.eta; }

double canonical_pairing(const ExtendedState& d1, const ExtendedState& d2) {
  return inner(d1.Y, d2.A) - inner(d2.Y, d1.A) + inner(d1.W, d2.eta) - inner(d2.W, d1.eta);
}

// ---------------------------------------------------------------------------
// Sources

SourceSpec::SourceSpec(GridPtr grid, ScalarProducer rho, VectorProducer J, std::vector<double> check_times)
    : grid_(std::move(grid)), rho_(std::move(rho)), J_(std::move(J)) {
  if (!rho_ || !J_) throw Error(ErrorCode::invalid_source, "charge and current producers are required");
  constexpr double delta = 1e-4;
  for (double t : check_times) {
    const ScalarField r = rho_(t);
    const VectorField j = J_(t);
    require_same_grid(*grid_, r.grid());
    require_same_grid(*grid_, j.grid());
    require_finite(r, "rho");
    require_finite(j, "J");
    const double scale = field_scale({&r}, {&j});
    const double m = mean(r);
    if (std::abs(m) > 1e-10 * scale) {
      throw Error(ErrorCode::invalid_source, "net charge " + sci(m) + " at t = " + sci(t) + "; the torus needs zero");
    }
    ScalarField continuity = rho_(t + delta) - rho_(t - delta);
    continuity *= 0.5 / delta;
    continuity += div(j);
    const double c = max_abs(continuity);
    if (c > 1e-6 * scale) {
      throw Error(ErrorCode::invalid_source, "continuity residual " + sci(c) + " at t = " + sci(t));
    }
  }
}

SourceSpec SourceSpec::vacuum(const GridPtr& grid) {
  return SourceSpec(
      grid, [grid](double) { return ScalarField(grid); }, [grid](double) { return VectorField(grid); }, {0.0});
}

SourceSpec SourceSpec::static_charge(const ScalarField& rho) {
  GridPtr grid = rho.grid_ptr();
  return SourceSpec(
      grid, [rho](double) { return rho; }, [grid](double) { return VectorField(grid); }, {0.0});
}

SourceSpec SourceSpec::from_charge(GridPtr grid, ScalarProducer rho, ScalarProducer drho_dt,
                                   VectorProducer transverse_current) {
  VectorProducer J = [drho_dt = std::move(drho_dt), jt = std::move(transverse_current)](double t) {
    VectorField j = grad(inv_laplacian(-drho_dt(t)));
    if (jt) j += jt(t);
    return j;
  };
  return SourceSpec(std::move(grid), std::move(rho), std::move(J));
}

// ---------------------------------------------------------------------------
// Reduced sourced system

double ReducedState::scale() const {
  double s = field_scale({&eta, &W}, {&S, &B, &F});
  if (A) s = std::max(s, max_abs(*A));
  return s;
}

VectorField init_F_from_charge(const ScalarField& rho) { return grad(inv_laplacian(rho)); }

VectorField electric_field(const ReducedState& s) { return curl(s.S) + s.F; }

namespace {

// curl S + F + grad W: the combination the Hamiltonian is quadratic in.
VectorField shifted_electric(const VectorField& S, const VectorField& F, const ScalarField& W) {
  VectorField e = curl(S);
  e += F;
  e += grad(W);
  return e;
}

}  // namespace

double hamiltonian_reduced(const ReducedState& s) {
  const VectorField e = shifted_electric(s.S, s.F, s.W);
  return 0.5 * (inner(e, e) + inner(s.B, s.B) + inner(s.eta, s.eta));
}

ReducedTangent rhs_reduced(const ReducedState& s) {
  const VectorField e = shifted_electric(s.S, s.F, s.W);
  return ReducedTangent{s.B, -curl(e), -div(e), -s.eta};
}

ReducedState make_reduced_state(const ScalarField& rho, const VectorField& B, const ScalarField& W,
                                const ScalarField& eta, double time, bool with_A_track) {
  ReducedState s{inv_curl(B), B, eta, W, init_F_from_charge(rho), time, std::nullopt};
  if (with_A_track) s.A = s.S + grad(inv_laplacian(eta));
  return s;
}

ReducedState step_reduced(const ReducedState& s, const SourceSpec& src, double dt) {
  require_stable_dt(s.grid(), dt);
  require_same_grid(s.grid(), *src.grid_ptr());
  const double half = 0.5 * dt;

  const VectorField e0 = shifted_electric(s.S, s.F, s.W);
  VectorField B = s.B;
  ScalarField eta = s.eta;
  B.add_scaled(-half, curl(e0));
  eta.add_scaled(-half, div(e0));

  VectorField S = s.S;
  ScalarField W = s.W;
  S.add_scaled(dt, B);
  W.add_scaled(-dt, eta);

  VectorField F = s.F;
  F.add_scaled(-dt, src.J(s.time + half));
  // The midpoint rule keeps div F = rho only to O(dt^3) per step; restore it
  // with a curl-free correction.
  F += grad(inv_laplacian(src.rho(s.time + dt) - div(F)));

  const VectorField e1 = shifted_electric(S, F, W);
  B.add_scaled(-half, curl(e1));
  eta.add_scaled(-half, div(e1));

  ReducedState out{std::move(S), std::move(B), std::move(eta), std::move(W), std::move(F), s.time + dt, std::nullopt};
  if (s.A) {
    VectorField A = *s.A;
    A.add_scaled(-half, e0);
    A.add_scaled(-half, e1);
    out.A = std::move(A);
  }
  return out;
}

VectorField reconstruct_S_from_B(const VectorField& B) { return inv_curl(B); }

MaxwellResiduals maxwell_residuals(const VectorField& E, const VectorField& B, const ScalarField& rho,
                                   const VectorField& J, const VectorField& E_prev, const VectorField& B_prev,
                                   double dt) {
  if (!(dt > 0.0)) throw Error(ErrorCode::step_size, "residual time spacing must be positive");
  for (const Grid* g : {&B.grid(), &rho.grid(), &J.grid(), &E_prev.grid(), &B_prev.grid()}) {
    require_same_grid(E.grid(), *g);
  }
  VectorField E_mid = E + E_prev;
  E_mid *= 0.5;
  VectorField B_mid = B + B_prev;
  B_mid *= 0.5;

  VectorField faraday = B - B_prev;
  faraday *= 1.0 / dt;
  faraday += curl(E_mid);

  VectorField ampere = E - E_prev;
  ampere *= 1.0 / dt;
  ampere -= curl(B_mid);
  ampere += J;

  return MaxwellResiduals{rms(faraday), rms(ampere), rms(div(E) - rho), rms(div(B))};
}

WaveResiduals wave_residuals(const ReducedState& prev, const ReducedState& mid, const ReducedState& next,
                             const SourceSpec& src) {
  if (!prev.A || !mid.A || !next.A) {
    throw Error(ErrorCode::feature_not_enabled, "vector wave residual needs the A-track");
  }
  const double dt = mid.time - prev.time;
  const double dt2 = next.time - mid.time;
  if (!(dt > 0.0) || std::abs(dt2 - dt) > 1e-9 * dt) {
    throw Error(ErrorCode::step_size, "wave residuals need three equally spaced states");
  }
  const double inv_dt2 = 1.0 / (dt * dt);

  ScalarField w = next.W - 2.0 * mid.W + prev.W;
  w *= inv_dt2;
  w -= laplacian(mid.W);
  w -= src.rho(mid.time);

  VectorField a = *next.A - 2.0 * *mid.A + *prev.A;
  a *= inv_dt2;
  a -= laplacian(*mid.A);
  a -= src.J(mid.time);

  return WaveResiduals{rms(w), rms(a)};
}

}  // namespace mxh
