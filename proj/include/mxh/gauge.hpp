#pragma once

// Finite-dimensional Poisson mechanics of a charged particle in abelian and
// Yang-Mills background fields.
//
// Phase points are flattened as z = (q[n], p[n], u[m], y[m]). A structure
// matrix J(z) defines {f, g} = grad(f)^T J grad(g) and dz/dt = J(z) grad H.
//
// Orientation: {q^i, p_j} = delta_ij, so dq/dt = dH/dp. With this choice the
// twisted bracket {p_i, p_j} = sum_s y_s F^(s)_ij gives dp/dt = y v x B for
// an abelian field with F_ij = eps_ijk B_k, i.e. y acts as a positive charge.
// The Lie-Poisson block is {y_s, y_k} = sum_r c^r_sk y_r, and the curvature
// in derive-from-potential mode is
//   F^(s)_ij = d_i A^(s)_j - d_j A^(s)_i + sum_{k,r} c^s_kr A^(k)_i A^(r)_j.
// The twisted structure is exactly the pullback of the canonical one under
// p~ = p + sum_s y_s A^(s)(q); for nonabelian algebras this pullback carries
// {p_i, y_k} = -sum_{s,r} A^(s)_i c^r_sk y_r.

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "mxh/error.hpp"

namespace mxh::gauge {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

class LieAlgebra {
 public:
  /// `c` holds c^r_sk at (r * m + s) * m + k. Checks antisymmetry in (s, k)
  /// and the Jacobi identity of the structure constants to 1e-12.
  LieAlgebra(int m, std::vector<double> c, std::string name = "custom");

  static LieAlgebra abelian(int m);
  /// c^r_sk = eps_rsk
  static LieAlgebra so3();
  /// Basis a_s = -i sigma_s / 2; same structure constants as so(3).
  static LieAlgebra su2();
  /// [a_1, a_2] = a_2
  static LieAlgebra affine2();

  int dim() const { return m_; }
  const std::string& name() const { return name_; }
  double c(int r, int s, int k) const { return c_[(static_cast<std::size_t>(r) * m_ + s) * m_ + k]; }
  bool is_abelian() const;
  /// Largest |sum_l c^l_sk c^r_lt + c^l_kt c^r_ls + c^l_ts c^r_lk|.
  double jacobi_defect() const;

 private:
  int m_;
  std::vector<double> c_;
  std::string name_;
};

/// xi = sum_s e_s a^s
struct CoadjointElement {
  Vec e;
};

/// A^(s)_j(q) as an m x n matrix, row s.
using PotentialFn = std::function<Mat(const Vec& q)>;
/// d_l A^(s)_j as n matrices (one per l) of shape m x n.
using PotentialJacobianFn = std::function<std::vector<Mat>(const Vec& q)>;
/// F^(s)_ij(q) as m matrices of shape n x n.
using CurvatureFn = std::function<std::vector<Mat>(const Vec& q)>;

enum class FieldMode {
  derive_from_potential,
  /// potential plus an independently supplied curvature, not checked against it
  analytic_curvature,
  /// curvature only; used to build fields that violate the Bianchi identity
  direct_curvature,
};

class GaugeField {
 public:
  static GaugeField from_potential(int n, int m, PotentialFn A, PotentialJacobianFn dA = {});
  static GaugeField with_curvature(int n, int m, PotentialFn A, CurvatureFn F);
  static GaugeField direct(int n, int m, CurvatureFn F);

  int base_dim() const { return n_; }
  int algebra_dim() const { return m_; }
  FieldMode mode() const { return mode_; }
  bool has_potential() const { return static_cast<bool>(potential_); }

  /// Zero matrix in direct-curvature mode.
  Mat potential(const Vec& q) const;
  std::vector<Mat> potential_jacobian(const Vec& q) const;
  /// Throws invalid_field if any F^(s) fails antisymmetry by more than 1e-12.
  std::vector<Mat> curvature(const Vec& q, const LieAlgebra& alg) const;
  /// Largest |F_supplied - F_from_potential| at q; zero in derive mode.
  double curvature_mismatch(const Vec& q, const LieAlgebra& alg) const;

 private:
  GaugeField(int n, int m, FieldMode mode) : n_(n), m_(m), mode_(mode) {}
  std::vector<Mat> derived_curvature(const Vec& q, const LieAlgebra& alg) const;

  int n_;
  int m_;
  FieldMode mode_;
  PotentialFn potential_;
  PotentialJacobianFn potential_jacobian_;
  CurvatureFn curvature_;
};

/// Built-in fields.
GaugeField constant_abelian_field(double bx, double by, double bz);
/// A = (1/2) B x q with B = (0, 0, b), written in the asymmetric gauge
/// A = (0, b q1, 0) when `landau_gauge` is set.
GaugeField constant_abelian_potential(double b, bool landau_gauge = true);
/// Direct curvature with B(q) = q, so div B = 3.
GaugeField nonclosed_abelian_field();
/// A = g^{-1} dg for g(q) = exp(theta1(q) a_1) exp(theta2(q) a_2) in su(2).
GaugeField su2_pure_gauge_field();
/// The flat su(2) potential with F^(1)_ij = amplitude * eps_ijk q_k supplied directly.
GaugeField su2_perturbed_field(double amplitude);
/// Smooth non-flat su(2) potential for trajectory comparisons.
GaugeField su2_smooth_field();

enum class Chart { twisted, canonical };

struct PhasePoint {
  Vec q;
  Vec p;
  Vec u;
  Vec y;
  Chart chart = Chart::twisted;

  int n() const { return static_cast<int>(q.size()); }
  int m() const { return static_cast<int>(u.size()); }
  Vec flat() const;
  static PhasePoint from_flat(int n, int m, const Vec& z, Chart chart);
};

enum class Provenance { twisted, canonical, abelian_twisted, abelian_canonical };
std::string to_string(Provenance p);

class PoissonStructure {
 public:
  PoissonStructure(int n, int m, std::function<Mat(const Vec&)> matrix, Provenance tag);

  int n() const { return n_; }
  int m() const { return m_; }
  int size() const { return 2 * (n_ + m_); }
  Provenance provenance() const { return tag_; }
  /// Structure matrix at z; throws if non-finite or antisymmetry fails by more than 1e-12.
  Mat matrix(const Vec& z) const;

 private:
  int n_;
  int m_;
  std::function<Mat(const Vec&)> matrix_;
  Provenance tag_;
};

/// Smooth function on phase space. Without an analytic gradient, gradients
/// are fourth-order central differences.
struct Observable {
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> gradient;

  Vec grad(const Vec& z) const;
};

Observable coordinate(int index);
/// 1/2 |p|^2 in either chart layout with base dimension n.
Observable free_kinetic_energy(int n, int m);

PoissonStructure twisted_structure(const GaugeField& field, const LieAlgebra& alg);
PoissonStructure canonical_structure(int n, const LieAlgebra& alg);

double bracket(const Observable& f, const Observable& g, const PoissonStructure& P, const Vec& z);
/// Cyclic sum {z_i, {z_j, z_k}} + {z_j, {z_k, z_i}} + {z_k, {z_i, z_j}}
/// from central differences of the structure matrix.
double jacobi_residual(const PoissonStructure& P, const Vec& z, int i, int j, int k);

/// Dense rank-3 array over base indices.
struct Tensor3 {
  int n = 0;
  std::vector<double> v;
  double operator()(int i, int j, int k) const { return v[(static_cast<std::size_t>(i) * n + j) * n + k]; }
  double& operator()(int i, int j, int k) { return v[(static_cast<std::size_t>(i) * n + j) * n + k]; }
  double max_abs() const;
};

/// Indexed (s, i, j, l).
struct Tensor4 {
  int m = 0;
  int n = 0;
  std::vector<double> v;
  std::size_t at(int s, int i, int j, int l) const {
    return ((static_cast<std::size_t>(s) * n + i) * n + j) * n + l;
  }
  double operator()(int s, int i, int j, int l) const { return v[at(s, i, j, l)]; }
  double& operator()(int s, int i, int j, int l) { return v[at(s, i, j, l)]; }
  double max_abs() const;
};

/// dF_ij/dq_k + dF_jk/dq_i + dF_ki/dq_j at every (i, j, k).
Tensor3 abelian_bianchi_residual(const GaugeField& field, const Vec& q);

/// Cyclic derivative of F^(s) plus sum_{k,r} c^s_kr (F^(k)_ij A^(r)_l + F^(k)_jl A^(r)_i + F^(k)_li A^(r)_j).
Tensor4 ym_field_residual(const GaugeField& field, const LieAlgebra& alg, const Vec& q);
/// Cyclic derivative of F^(s) plus sum_{k,r} c^s_kr (A^(k)_l F^(r)_ij + cyclic): the covariant
/// Bianchi identity for the curvature convention above.
Tensor4 covariant_bianchi_residual(const GaugeField& field, const LieAlgebra& alg, const Vec& q);

/// p~ = p + sum_s y_s A^(s)(q); input must be in the twisted chart.
PhasePoint minimal_coupling(const PhasePoint& z, const GaugeField& field);
/// p = p~ - sum_s y_s A^(s)(q); input must be in the canonical chart.
PhasePoint minimal_decoupling(const PhasePoint& z, const GaugeField& field);

struct AdInvariance {
  bool invariant = false;
  /// R(s, k) = sum_r c^r_sk e_r
  Mat residual;
};

AdInvariance ad_invariance_check(const LieAlgebra& alg, const CoadjointElement& xi);

/// Matrix of the reduced two-form on (q, p): with omega = 1/2 Omega_ab dz^a ^ dz^b,
/// Omega = [[Phi, -I], [I, 0]] and Phi_ij = sum_s e_s F^(s)_ij(q). Its inverse is
/// the (q, p) block of the twisted structure at y = e.
Mat reduced_two_form(const Vec& q, const CoadjointElement& xi, const GaugeField& field, const LieAlgebra& alg);

struct Trajectory {
  std::vector<double> t;
  std::vector<Vec> z;
  std::vector<double> energy;
};

/// Classical fourth-order Runge-Kutta on dz/dt = J(z) grad H(z).
Trajectory integrate_particle(const Observable& H, const PoissonStructure& P, const PhasePoint& z0, double dt,
                              int steps);

/// Integrates z0 under the twisted structure and its minimally coupled image
/// under the canonical structure with H~(q, p~, y) = H(q, p~ - sum y_s A^(s), y),
/// maps the canonical trajectory back, and returns the largest coordinate
/// deviation over all steps.
double chart_equivalence(const PhasePoint& z0, const GaugeField& field, const LieAlgebra& alg,
                         const Observable& H_twisted, double dt, int steps);

}  // namespace mxh::gauge
