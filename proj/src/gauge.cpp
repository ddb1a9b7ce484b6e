#include "mxh/gauge.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace mxh::gauge {

namespace {

// Step for derivatives of field data, relative to 1 + |q|. Fourth-order
// stencils balance truncation and roundoff near eps^(1/5).
constexpr double kFieldStep = 1e-3;
// Step for observable gradients inside brackets, relative to max(1, |z|).
constexpr double kBracketStep = 1e-5;

// Returns an evaluated value, never an Eigen expression over temporaries.
template <class Fn>
auto central4(Fn&& f, const Vec& x, int l, double h) -> std::decay_t<decltype(f(x))> {
  Vec xp2 = x, xp1 = x, xm1 = x, xm2 = x;
  xp2(l) += 2 * h;
  xp1(l) += h;
  xm1(l) -= h;
  xm2(l) -= 2 * h;
  return ((f(xm2) - f(xp2)) + 8.0 * (f(xp1) - f(xm1))) / (12.0 * h);
}

double epsilon(int i, int j, int k) {
  if (i == j || j == k || i == k) return 0.0;
  return ((j - i + 3) % 3 == 1) ? 1.0 : -1.0;
}

void require_dims(const GaugeField& field, const LieAlgebra& alg) {
  if (field.algebra_dim() != alg.dim()) {
    throw Error(ErrorCode::dimension_mismatch, "field has " + std::to_string(field.algebra_dim()) +
                                                   " algebra components, algebra has dimension " +
                                                   std::to_string(alg.dim()));
  }
}

void require_size(const Vec& q, int n) {
  if (q.size() != n) {
    throw Error(ErrorCode::dimension_mismatch,
                "expected base point of dimension " + std::to_string(n) + ", got " + std::to_string(q.size()));
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Lie algebras

LieAlgebra::LieAlgebra(int m, std::vector<double> c, std::string name) : m_(m), c_(std::move(c)), name_(std::move(name)) {
  if (m < 0 || c_.size() != static_cast<std::size_t>(m) * m * m) {
    throw Error(ErrorCode::dimension_mismatch, "structure constants need m^3 entries");
  }
  for (int r = 0; r < m; ++r)
    for (int s = 0; s < m; ++s)
      for (int k = 0; k < m; ++k)
        if (this->c(r, s, k) != -this->c(r, k, s)) {
          throw Error(ErrorCode::invalid_field, "structure constants are not antisymmetric in the lower indices");
        }
  const double defect = jacobi_defect();
  if (defect > 1e-12) {
    std::ostringstream os;
    os << "structure constants violate the Jacobi identity by " << defect;
    throw Error(ErrorCode::invalid_field, os.str());
  }
}

LieAlgebra LieAlgebra::abelian(int m) {
  return LieAlgebra(m, std::vector<double>(static_cast<std::size_t>(m) * m * m, 0.0), "abelian");
}

LieAlgebra LieAlgebra::so3() {
  std::vector<double> c(27, 0.0);
  for (int r = 0; r < 3; ++r)
    for (int s = 0; s < 3; ++s)
      for (int k = 0; k < 3; ++k) c[(r * 3 + s) * 3 + k] = epsilon(r, s, k);
  return LieAlgebra(3, std::move(c), "so3");
}

LieAlgebra LieAlgebra::su2() {
  LieAlgebra a = so3();
  a.name_ = "su2";
  return a;
}

LieAlgebra LieAlgebra::affine2() {
  std::vector<double> c(8, 0.0);
  c[(1 * 2 + 0) * 2 + 1] = 1.0;   // c^2_12
  c[(1 * 2 + 1) * 2 + 0] = -1.0;  // c^2_21
  return LieAlgebra(2, std::move(c), "affine2");
}

bool LieAlgebra::is_abelian() const {
  return std::all_of(c_.begin(), c_.end(), [](double x) { return x == 0.0; });
}

double LieAlgebra::jacobi_defect() const {
  double worst = 0.0;
  for (int r = 0; r < m_; ++r)
    for (int s = 0; s < m_; ++s)
      for (int k = 0; k < m_; ++k)
        for (int t = 0; t < m_; ++t) {
          double sum = 0.0;
          for (int l = 0; l < m_; ++l) {
            sum += c(l, s, k) * c(r, l, t) + c(l, k, t) * c(r, l, s) + c(l, t, s) * c(r, l, k);
          }
          worst = std::max(worst, std::abs(sum));
        }
  return worst;
}

// ---------------------------------------------------------------------------
// Gauge fields

GaugeField GaugeField::from_potential(int n, int m, PotentialFn A, PotentialJacobianFn dA) {
  GaugeField f(n, m, FieldMode::derive_from_potential);
  f.potential_ = std::move(A);
  f.potential_jacobian_ = std::move(dA);
  return f;
}

GaugeField GaugeField::with_curvature(int n, int m, PotentialFn A, CurvatureFn F) {
  GaugeField f(n, m, FieldMode::analytic_curvature);
  f.potential_ = std::move(A);
  f.curvature_ = std::move(F);
  return f;
}

GaugeField GaugeField::direct(int n, int m, CurvatureFn F) {
  GaugeField f(n, m, FieldMode::direct_curvature);
  f.curvature_ = std::move(F);
  return f;
}

Mat GaugeField::potential(const Vec& q) const {
  require_size(q, n_);
  if (!potential_) return Mat::Zero(m_, n_);
  Mat a = potential_(q);
  if (a.rows() != m_ || a.cols() != n_) throw Error(ErrorCode::dimension_mismatch, "potential must be m x n");
  return a;
}

std::vector<Mat> GaugeField::potential_jacobian(const Vec& q) const {
  if (!potential_) throw Error(ErrorCode::wrong_mode, "field has no potential");
  if (potential_jacobian_) return potential_jacobian_(q);
  const double h = kFieldStep * (1.0 + q.norm());
  std::vector<Mat> d;
  d.reserve(n_);
  for (int l = 0; l < n_; ++l) d.push_back(central4([this](const Vec& x) { return potential(x); }, q, l, h));
  return d;
}

std::vector<Mat> GaugeField::derived_curvature(const Vec& q, const LieAlgebra& alg) const {
  const Mat A = potential(q);
  const std::vector<Mat> dA = potential_jacobian(q);
  std::vector<Mat> F(m_, Mat::Zero(n_, n_));
  for (int s = 0; s < m_; ++s)
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) {
        double v = dA[i](s, j) - dA[j](s, i);
        for (int k = 0; k < m_; ++k)
          for (int r = 0; r < m_; ++r) v += alg.c(s, k, r) * A(k, i) * A(r, j);
        F[s](i, j) = v;
      }
  return F;
}

std::vector<Mat> GaugeField::curvature(const Vec& q, const LieAlgebra& alg) const {
  require_size(q, n_);
  require_dims(*this, alg);
  if (mode_ == FieldMode::derive_from_potential) return derived_curvature(q, alg);
  std::vector<Mat> F = curvature_(q);
  if (static_cast<int>(F.size()) != m_) throw Error(ErrorCode::dimension_mismatch, "curvature needs m components");
  for (const Mat& f : F) {
    if (f.rows() != n_ || f.cols() != n_) throw Error(ErrorCode::dimension_mismatch, "curvature must be n x n");
    if ((f + f.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
      throw Error(ErrorCode::invalid_field, "curvature is not antisymmetric");
    }
  }
  return F;
}

double GaugeField::curvature_mismatch(const Vec& q, const LieAlgebra& alg) const {
  if (mode_ == FieldMode::derive_from_potential) return 0.0;
  if (!potential_) throw Error(ErrorCode::wrong_mode, "direct-curvature field has no potential to compare with");
  const auto supplied = curvature(q, alg);
  const auto derived = derived_curvature(q, alg);
  double worst = 0.0;
  for (int s = 0; s < m_; ++s) worst = std::max(worst, (supplied[s] - derived[s]).cwiseAbs().maxCoeff());
  return worst;
}

GaugeField constant_abelian_field(double bx, double by, double bz) {
  const Eigen::Vector3d B(bx, by, bz);
  auto A = [B](const Vec& q) {
    const Eigen::Vector3d a = 0.5 * B.cross(Eigen::Vector3d(q(0), q(1), q(2)));
    return Mat(a.transpose());
  };
  auto F = [B](const Vec&) {
    Mat f = Mat::Zero(3, 3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) f(i, j) += epsilon(i, j, k) * B(k);
    return std::vector<Mat>{f};
  };
  return GaugeField::with_curvature(3, 1, A, F);
}

GaugeField constant_abelian_potential(double b, bool landau_gauge) {
  if (landau_gauge) {
    return GaugeField::from_potential(3, 1, [b](const Vec& q) {
      Mat a = Mat::Zero(1, 3);
      a(0, 1) = b * q(0);
      return a;
    });
  }
  return GaugeField::from_potential(3, 1, [b](const Vec& q) {
    Mat a = Mat::Zero(1, 3);
    a(0, 0) = -0.5 * b * q(1);
    a(0, 1) = 0.5 * b * q(0);
    return a;
  });
}

GaugeField nonclosed_abelian_field() {
  return GaugeField::direct(3, 1, [](const Vec& q) {
    Mat f = Mat::Zero(3, 3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) f(i, j) += epsilon(i, j, k) * q(k);
    return std::vector<Mat>{f};
  });
}

namespace {

Mat su2_pure_gauge_potential(const Vec& q) {
  const double theta2 = 0.7 * std::cos(q(1)) + 0.3 * q(0);
  const Eigen::Vector3d dtheta1(std::cos(q(0)), 0.5 * q(2), 0.5 * q(1));
  const Eigen::Vector3d dtheta2(0.3, -0.7 * std::sin(q(1)), 0.0);
  Mat a(3, 3);
  a.row(0) = std::cos(theta2) * dtheta1.transpose();
  a.row(1) = dtheta2.transpose();
  a.row(2) = std::sin(theta2) * dtheta1.transpose();
  return a;
}

}  // namespace

GaugeField su2_pure_gauge_field() {
  // theta1 = sin q1 + q2 q3 / 2, theta2 = 0.7 cos q2 + 0.3 q1;
  // g^{-1} dg = dtheta1 (cos theta2 a_1 + sin theta2 a_3) + dtheta2 a_2.
  return GaugeField::from_potential(3, 3, su2_pure_gauge_potential);
}

GaugeField su2_perturbed_field(double amplitude) {
  return GaugeField::with_curvature(3, 3, su2_pure_gauge_potential, [amplitude](const Vec& q) {
    std::vector<Mat> F(3, Mat::Zero(3, 3));
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) F[0](i, j) += amplitude * epsilon(i, j, k) * q(k);
    return F;
  });
}

GaugeField su2_smooth_field() {
  return GaugeField::from_potential(3, 3, [](const Vec& q) {
    Mat a = Mat::Zero(3, 3);
    a(0, 1) = 0.3 * std::sin(q(0));
    a(0, 2) = 0.1 * q(1);
    a(1, 0) = 0.2 * std::cos(q(2));
    a(2, 2) = 0.25 * std::sin(q(1));
    a(2, 0) = 0.15 * q(1) * q(2);
    return a;
  });
}

// ---------------------------------------------------------------------------
// Phase space

Vec PhasePoint::flat() const {
  Vec z(2 * (q.size() + u.size()));
  z << q, p, u, y;
  return z;
}

PhasePoint PhasePoint::from_flat(int n, int m, const Vec& z, Chart chart) {
  if (z.size() != 2 * (n + m)) throw Error(ErrorCode::dimension_mismatch, "phase vector has the wrong length");
  return PhasePoint{z.segment(0, n), z.segment(n, n), z.segment(2 * n, m), z.segment(2 * n + m, m), chart};
}

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::twisted: return "twisted";
    case Provenance::canonical: return "canonical";
    case Provenance::abelian_twisted: return "abelian-twisted";
    case Provenance::abelian_canonical: return "abelian-canonical";
  }
  return "unknown";
}

PoissonStructure::PoissonStructure(int n, int m, std::function<Mat(const Vec&)> matrix, Provenance tag)
    : n_(n), m_(m), matrix_(std::move(matrix)), tag_(tag) {}

Mat PoissonStructure::matrix(const Vec& z) const {
  if (z.size() != size()) throw Error(ErrorCode::dimension_mismatch, "phase vector has the wrong length");
  Mat J = matrix_(z);
  if (!J.allFinite()) throw Error(ErrorCode::blow_up, "structure matrix is not finite");
  if ((J + J.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw Error(ErrorCode::invalid_field, "structure matrix is not antisymmetric");
  }
  return J;
}

Vec Observable::grad(const Vec& z) const {
  if (gradient) return gradient(z);
  const double h = kBracketStep * std::max(1.0, z.norm());
  Vec g(z.size());
  for (int l = 0; l < z.size(); ++l) {
    const double d = central4(value, z, l, h);
    if (!std::isfinite(d)) throw Error(ErrorCode::invalid_field, "observable is not finite near z");
    g(l) = d;
  }
  return g;
}

Observable coordinate(int index) {
  return Observable{[index](const Vec& z) { return z(index); },
                    [index](const Vec& z) {
                      Vec g = Vec::Zero(z.size());
                      g(index) = 1.0;
                      return g;
                    }};
}

Observable free_kinetic_energy(int n, int m) {
  (void)m;
  return Observable{[n](const Vec& z) { return 0.5 * z.segment(n, n).squaredNorm(); },
                    [n](const Vec& z) {
                      Vec g = Vec::Zero(z.size());
                      g.segment(n, n) = z.segment(n, n);
                      return g;
                    }};
}

PoissonStructure twisted_structure(const GaugeField& field, const LieAlgebra& alg) {
  require_dims(field, alg);
  const int n = field.base_dim();
  const int m = alg.dim();
  auto matrix = [field, alg, n, m](const Vec& z) {
    const Vec q = z.segment(0, n);
    const Vec y = z.segment(2 * n + m, m);
    const int P = n, U = 2 * n, Y = 2 * n + m;
    Mat J = Mat::Zero(2 * (n + m), 2 * (n + m));
    for (int i = 0; i < n; ++i) {
      J(i, P + i) = 1.0;
      J(P + i, i) = -1.0;
    }
    const auto F = field.curvature(q, alg);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double v = 0.0;
        for (int s = 0; s < m; ++s) v += y(s) * F[s](i, j);
        J(P + i, P + j) = v;
      }
    const Mat A = field.potential(q);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < m; ++k) {
        J(P + i, U + k) = A(k, i);
        J(U + k, P + i) = -A(k, i);
        double v = 0.0;
        for (int s = 0; s < m; ++s)
          for (int r = 0; r < m; ++r) v -= A(s, i) * alg.c(r, s, k) * y(r);
        J(P + i, Y + k) = v;
        J(Y + k, P + i) = -v;
      }
    for (int k = 0; k < m; ++k) {
      J(U + k, Y + k) = 1.0;
      J(Y + k, U + k) = -1.0;
    }
    for (int s = 0; s < m; ++s)
      for (int k = 0; k < m; ++k) {
        double v = 0.0;
        for (int r = 0; r < m; ++r) v += alg.c(r, s, k) * y(r);
        J(Y + s, Y + k) = v;
      }
    return J;
  };
  const Provenance tag = (m == 1 && alg.is_abelian()) ? Provenance::abelian_twisted : Provenance::twisted;
  return PoissonStructure(n, m, matrix, tag);
}

PoissonStructure canonical_structure(int n, const LieAlgebra& alg) {
  const int m = alg.dim();
  auto matrix = [alg, n, m](const Vec& z) {
    const Vec y = z.segment(2 * n + m, m);
    const int P = n, U = 2 * n, Y = 2 * n + m;
    Mat J = Mat::Zero(2 * (n + m), 2 * (n + m));
    for (int i = 0; i < n; ++i) {
      J(i, P + i) = 1.0;
      J(P + i, i) = -1.0;
    }
    for (int k = 0; k < m; ++k) {
      J(U + k, Y + k) = 1.0;
      J(Y + k, U + k) = -1.0;
    }
    for (int s = 0; s < m; ++s)
      for (int k = 0; k < m; ++k) {
        double v = 0.0;
        for (int r = 0; r < m; ++r) v += alg.c(r, s, k) * y(r);
        J(Y + s, Y + k) = v;
      }
    return J;
  };
  const Provenance tag = (m == 1 && alg.is_abelian()) ? Provenance::abelian_canonical : Provenance::canonical;
  return PoissonStructure(n, m, matrix, tag);
}

double bracket(const Observable& f, const Observable& g, const PoissonStructure& P, const Vec& z) {
  const Mat J = P.matrix(z);
  return f.grad(z).dot(J * g.grad(z));
}

double jacobi_residual(const PoissonStructure& P, const Vec& z, int i, int j, int k) {
  const int d = P.size();
  for (int idx : {i, j, k}) {
    if (idx < 0 || idx >= d) throw Error(ErrorCode::dimension_mismatch, "coordinate index out of range");
  }
  const Mat J = P.matrix(z);
  const double h = kFieldStep * std::max(1.0, z.norm());
  double sum = 0.0;
  for (int l = 0; l < d; ++l) {
    if (J(i, l) == 0.0 && J(j, l) == 0.0 && J(k, l) == 0.0) continue;
    const Mat dJ = central4([&P](const Vec& x) { return P.matrix(x); }, z, l, h);
    sum += J(i, l) * dJ(j, k) + J(j, l) * dJ(k, i) + J(k, l) * dJ(i, j);
  }
  return sum;
}

double Tensor3::max_abs() const {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double Tensor4::max_abs() const {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

namespace {

// d_l F^(s)_ij for all l: entry [l][s](i, j).
std::vector<std::vector<Mat>> curvature_derivatives(const GaugeField& field, const LieAlgebra& alg, const Vec& q) {
  const int n = field.base_dim();
  const int m = field.algebra_dim();
  const double h = kFieldStep * (1.0 + q.norm());
  std::vector<std::vector<Mat>> dF(n, std::vector<Mat>(m));
  for (int l = 0; l < n; ++l) {
    Vec x = q;
    auto at = [&](double shift) {
      x = q;
      x(l) += shift;
      return field.curvature(x, alg);
    };
    const auto p2 = at(2 * h), p1 = at(h), m1 = at(-h), m2 = at(-2 * h);
    for (int s = 0; s < m; ++s) dF[l][s] = ((m2[s] - p2[s]) + 8.0 * (p1[s] - m1[s])) / (12.0 * h);
  }
  return dF;
}

enum class CommutatorOrder { field_first, potential_first };

Tensor4 bianchi_like(const GaugeField& field, const LieAlgebra& alg, const Vec& q, CommutatorOrder order) {
  require_dims(field, alg);
  require_size(q, field.base_dim());
  if (!field.has_potential()) {
    throw Error(ErrorCode::wrong_mode, "Yang-Mills residual needs the potential; field is direct-curvature only");
  }
  const int n = field.base_dim();
  const int m = field.algebra_dim();
  const auto F = field.curvature(q, alg);
  const Mat A = field.potential(q);
  const auto dF = curvature_derivatives(field, alg, q);
  Tensor4 out{m, n, std::vector<double>(static_cast<std::size_t>(m) * n * n * n, 0.0)};
  for (int s = 0; s < m; ++s)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int l = 0; l < n; ++l) {
          double v = dF[l][s](i, j) + dF[i][s](j, l) + dF[j][s](l, i);
          for (int k = 0; k < m; ++k)
            for (int r = 0; r < m; ++r) {
              const double c = alg.c(s, k, r);
              if (c == 0.0) continue;
              if (order == CommutatorOrder::field_first) {
                v += c * (F[k](i, j) * A(r, l) + F[k](j, l) * A(r, i) + F[k](l, i) * A(r, j));
              } else {
                v += c * (A(k, l) * F[r](i, j) + A(k, i) * F[r](j, l) + A(k, j) * F[r](l, i));
              }
            }
          out(s, i, j, l) = v;
        }
  return out;
}

}  // namespace

Tensor3 abelian_bianchi_residual(const GaugeField& field, const Vec& q) {
  if (field.algebra_dim() != 1) {
    throw Error(ErrorCode::wrong_mode, "abelian Bianchi residual needs a single abelian component");
  }
  require_size(q, field.base_dim());
  const int n = field.base_dim();
  const LieAlgebra u1 = LieAlgebra::abelian(1);
  const auto dF = curvature_derivatives(field, u1, q);
  Tensor3 out{n, std::vector<double>(static_cast<std::size_t>(n) * n * n, 0.0)};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) out(i, j, k) = dF[k][0](i, j) + dF[i][0](j, k) + dF[j][0](k, i);
  return out;
}

Tensor4 ym_field_residual(const GaugeField& field, const LieAlgebra& alg, const Vec& q) {
  return bianchi_like(field, alg, q, CommutatorOrder::field_first);
}

Tensor4 covariant_bianchi_residual(const GaugeField& field, const LieAlgebra& alg, const Vec& q) {
  return bianchi_like(field, alg, q, CommutatorOrder::potential_first);
}

PhasePoint minimal_coupling(const PhasePoint& z, const GaugeField& field) {
  if (z.chart != Chart::twisted) throw Error(ErrorCode::wrong_chart, "minimal coupling expects a twisted-chart point");
  if (z.n() != field.base_dim() || z.m() != field.algebra_dim()) {
    throw Error(ErrorCode::dimension_mismatch, "phase point does not match the field dimensions");
  }
  PhasePoint out = z;
  out.p = z.p + field.potential(z.q).transpose() * z.y;
  out.chart = Chart::canonical;
  return out;
}

PhasePoint minimal_decoupling(const PhasePoint& z, const GaugeField& field) {
  if (z.chart != Chart::canonical) {
    throw Error(ErrorCode::wrong_chart, "minimal decoupling expects a canonical-chart point");
  }
  if (z.n() != field.base_dim() || z.m() != field.algebra_dim()) {
    throw Error(ErrorCode::dimension_mismatch, "phase point does not match the field dimensions");
  }
  PhasePoint out = z;
  out.p = z.p - field.potential(z.q).transpose() * z.y;
  out.chart = Chart::twisted;
  return out;
}

AdInvariance ad_invariance_check(const LieAlgebra& alg, const CoadjointElement& xi) {
  const int m = alg.dim();
  if (xi.e.size() != m) throw Error(ErrorCode::dimension_mismatch, "coadjoint element has the wrong dimension");
  AdInvariance out{true, Mat::Zero(m, m)};
  for (int s = 0; s < m; ++s)
    for (int k = 0; k < m; ++k) {
      double v = 0.0;
      for (int r = 0; r < m; ++r) v += alg.c(r, s, k) * xi.e(r);
      out.residual(s, k) = v;
      if (std::abs(v) > 1e-12) out.invariant = false;
    }
  return out;
}

Mat reduced_two_form(const Vec& q, const CoadjointElement& xi, const GaugeField& field, const LieAlgebra& alg) {
  require_dims(field, alg);
  const AdInvariance inv = ad_invariance_check(alg, xi);
  if (!inv.invariant) {
    throw Error(ErrorCode::precondition,
                "reduction needs a coadjoint-invariant element: sum_r c^r_sk e_r must vanish for all s, k");
  }
  const int n = field.base_dim();
  const auto F = field.curvature(q, alg);
  Mat omega = Mat::Zero(2 * n, 2 * n);
  for (int s = 0; s < alg.dim(); ++s) omega.topLeftCorner(n, n) += xi.e(s) * F[s];
  omega.topRightCorner(n, n) = -Mat::Identity(n, n);
  omega.bottomLeftCorner(n, n) = Mat::Identity(n, n);
  return omega;
}

Trajectory integrate_particle(const Observable& H, const PoissonStructure& P, const PhasePoint& z0, double dt,
                              int steps) {
  if (!(dt > 0.0)) throw Error(ErrorCode::step_size, "dt must be positive");
  if (z0.n() != P.n() || z0.m() != P.m()) {
    throw Error(ErrorCode::dimension_mismatch, "phase point does not match the structure dimensions");
  }
  const bool canonical_structure =
      P.provenance() == Provenance::canonical || P.provenance() == Provenance::abelian_canonical;
  if (canonical_structure != (z0.chart == Chart::canonical)) {
    throw Error(ErrorCode::wrong_chart, "phase point chart does not match the structure");
  }
  auto rhs = [&](const Vec& z) -> Vec { return P.matrix(z) * H.grad(z); };

  Trajectory traj;
  traj.t.reserve(steps + 1);
  traj.z.reserve(steps + 1);
  traj.energy.reserve(steps + 1);
  Vec z = z0.flat();
  traj.t.push_back(0.0);
  traj.z.push_back(z);
  traj.energy.push_back(H.value(z));
  for (int n = 1; n <= steps; ++n) {
    Vec next;
    try {
      const Vec k1 = rhs(z);
      const Vec k2 = rhs(z + 0.5 * dt * k1);
      const Vec k3 = rhs(z + 0.5 * dt * k2);
      const Vec k4 = rhs(z + dt * k3);
      next = z + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::blow_up && e.code() != ErrorCode::invalid_field) throw;
      next = Vec::Constant(z.size(), std::numeric_limits<double>::quiet_NaN());
    }
    if (!next.allFinite()) {
      throw Error(ErrorCode::blow_up, "non-finite state at step " + std::to_string(n) + "; last valid step " +
                                          std::to_string(n - 1));
    }
    z = std::move(next);
    traj.t.push_back(n * dt);
    traj.z.push_back(z);
    traj.energy.push_back(H.value(z));
  }
  return traj;
}

double chart_equivalence(const PhasePoint& z0, const GaugeField& field, const LieAlgebra& alg,
                         const Observable& H_twisted, double dt, int steps) {
  const int n = field.base_dim();
  const int m = alg.dim();
  const Trajectory twisted = integrate_particle(H_twisted, twisted_structure(field, alg), z0, dt, steps);

  Observable H_canonical{[&](const Vec& z) {
                           const PhasePoint back = minimal_decoupling(PhasePoint::from_flat(n, m, z, Chart::canonical), field);
                           return H_twisted.value(back.flat());
                         },
                         {}};
  const Trajectory canonical =
      integrate_particle(H_canonical, canonical_structure(n, alg), minimal_coupling(z0, field), dt, steps);

  double worst = 0.0;
  for (std::size_t s = 0; s < twisted.z.size(); ++s) {
    const PhasePoint back = minimal_decoupling(PhasePoint::from_flat(n, m, canonical.z[s], Chart::canonical), field);
    worst = std::max(worst, (back.flat() - twisted.z[s]).cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace mxh::gauge
