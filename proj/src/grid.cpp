#include "mxh/grid.hpp"

#include <fftw3.h>

#ifdef __GLIBC__
#include <malloc.h>
#endif

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>
#include <sstream>

namespace mxh {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_grid: return "invalid grid";
    case ErrorCode::invalid_field: return "invalid field";
    case ErrorCode::grid_mismatch: return "grid mismatch";
    case ErrorCode::unsolvable_on_torus: return "unsolvable on torus";
    case ErrorCode::constraint_violation: return "constraint violation";
    case ErrorCode::step_size: return "step size";
    case ErrorCode::feature_not_enabled: return "feature not enabled";
    case ErrorCode::invalid_polarization: return "invalid polarization";
    case ErrorCode::invalid_source: return "invalid source";
    case ErrorCode::dimension_mismatch: return "dimension mismatch";
    case ErrorCode::wrong_mode: return "wrong mode";
    case ErrorCode::precondition: return "precondition";
    case ErrorCode::wrong_chart: return "wrong chart";
    case ErrorCode::blow_up: return "blow-up";
    case ErrorCode::unknown_scenario: return "unknown scenario";
    case ErrorCode::invalid_config: return "invalid config";
    case ErrorCode::io: return "io";
  }
  return "error";
}

std::string_view to_string(Backend backend) {
  return backend == Backend::spectral ? "spectral" : "central2";
}

Backend backend_from_string(std::string_view name) {
  if (name == "spectral") return Backend::spectral;
  if (name == "central2" || name == "central-difference-2") return Backend::central2;
  throw Error(ErrorCode::invalid_grid, "unknown backend '" + std::string(name) + "'");
}

namespace {

using cplx = std::complex<double>;

// SIMD-aligned storage so the transforms can use aligned FFTW plans.
template <class T>
struct FftwAllocator {
  using value_type = T;
  FftwAllocator() = default;
  template <class U>
  FftwAllocator(const FftwAllocator<U>&) {}
  T* allocate(std::size_t n) {
    void* p = fftw_malloc(n * sizeof(T));
    if (!p) throw std::bad_alloc();
    return static_cast<T*>(p);
  }
  void deallocate(T* p, std::size_t) { fftw_free(p); }
  template <class U>
  bool operator==(const FftwAllocator<U>&) const {
    return true;
  }
};

using Spectrum = std::vector<cplx, FftwAllocator<cplx>>;
using RealBuffer = std::vector<double, FftwAllocator<double>>;

// FFTW planning is not thread safe.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

// Field temporaries run to a few hundred kB. Past glibc's default mmap
// threshold each one would be a fresh zero-filled mapping, and page faults
// then cost more than the transforms themselves.
void keep_field_temporaries_on_heap() {
#ifdef __GLIBC__
  static std::once_flag once;
  std::call_once(once, [] {
    mallopt(M_MMAP_THRESHOLD, 64 << 20);
    mallopt(M_TRIM_THRESHOLD, 256 << 20);
  });
#endif
}

}  // namespace

// Real-to-complex transforms over the full (padded) 3D extent plus the
// per-axis derivative symbols of the grid's backend: derivative along axis a
// multiplies mode coefficients by i*kappa[a].
struct Grid::Spectral {
  std::array<int, 3> cext{};
  std::size_t csize = 0;
  std::array<std::vector<double>, 3> kappa;
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;

  ~Spectral() {
    std::lock_guard lock(fftw_planner_mutex());
    if (forward) fftw_destroy_plan(forward);
    if (backward) fftw_destroy_plan(backward);
  }

  Spectrum transform(std::span<const double> in) const {
    RealBuffer scratch(in.begin(), in.end());
    Spectrum out(csize);
    fftw_execute_dft_r2c(forward, scratch.data(), reinterpret_cast<fftw_complex*>(out.data()));
    return out;
  }

  std::vector<double> inverse(Spectrum in, std::size_t nreal) const {
    RealBuffer scratch(nreal);
    fftw_execute_dft_c2r(backward, reinterpret_cast<fftw_complex*>(in.data()), scratch.data());
    const double norm = 1.0 / static_cast<double>(nreal);
    std::vector<double> out(nreal);
    for (std::size_t n = 0; n < nreal; ++n) out[n] = scratch[n] * norm;
    return out;
  }

  std::size_t cindex(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * cext[1] + j) * cext[2] + k;
  }

  double kappa2(int i, int j, int k) const {
    return kappa[0][i] * kappa[0][i] + kappa[1][j] * kappa[1][j] + kappa[2][k] * kappa[2][k];
  }

  template <class Fn>
  void for_each_mode(Fn&& fn) const {
    for (int i = 0; i < cext[0]; ++i)
      for (int j = 0; j < cext[1]; ++j)
        for (int k = 0; k < cext[2]; ++k) fn(i, j, k, cindex(i, j, k));
  }
};

GridPtr Grid::make(std::vector<int> points, std::vector<double> lengths, Backend backend) {
  keep_field_temporaries_on_heap();
  if (points.empty() || points.size() > 3) {
    throw Error(ErrorCode::invalid_grid, "grid needs 1 to 3 axes, got " + std::to_string(points.size()));
  }
  if (lengths.size() != points.size()) {
    throw Error(ErrorCode::invalid_grid, "points and lengths must have the same number of axes");
  }
  std::array<int, 3> ext{1, 1, 1};
  std::array<double, 3> len{0.0, 0.0, 0.0};
  for (std::size_t a = 0; a < points.size(); ++a) {
    if (points[a] < 4) {
      throw Error(ErrorCode::invalid_grid,
                  "axis " + std::to_string(a) + " has " + std::to_string(points[a]) + " points, need at least 4");
    }
    if (backend == Backend::spectral && points[a] % 2 != 0) {
      throw Error(ErrorCode::invalid_grid,
                  "spectral backend needs an even point count, axis " + std::to_string(a) + " has " +
                      std::to_string(points[a]));
    }
    if (!(lengths[a] > 0.0) || !std::isfinite(lengths[a])) {
      throw Error(ErrorCode::invalid_grid, "axis " + std::to_string(a) + " length must be positive");
    }
    ext[a] = points[a];
    len[a] = lengths[a];
  }
  return GridPtr(new Grid(static_cast<int>(points.size()), ext, len, backend));
}

Grid::Grid(int dim, std::array<int, 3> extents, std::array<double, 3> lengths, Backend backend)
    : dim_(dim), extents_(extents), lengths_(lengths), backend_(backend) {
  size_ = static_cast<std::size_t>(extents_[0]) * extents_[1] * extents_[2];
  for (int a = 0; a < 3; ++a) spacing_[a] = a < dim_ ? lengths_[a] / extents_[a] : 1.0;

  spectral_ = std::make_unique<Spectral>();
  auto& sp = *spectral_;
  sp.cext = {extents_[0], extents_[1], extents_[2] / 2 + 1};
  sp.csize = static_cast<std::size_t>(sp.cext[0]) * sp.cext[1] * sp.cext[2];
  for (int a = 0; a < 3; ++a) {
    const int n = extents_[a];
    sp.kappa[a].assign(sp.cext[a], 0.0);
    if (a >= dim_) continue;
    for (int idx = 0; idx < sp.cext[a]; ++idx) {
      const int m = idx <= n / 2 ? idx : idx - n;
      // The highest mode of an even grid has no real-valued derivative, and
      // the central stencil annihilates it anyway.
      if (m == 0 || 2 * std::abs(m) == n) continue;
      const double k = 2.0 * std::numbers::pi * m / lengths_[a];
      sp.kappa[a][idx] = backend_ == Backend::spectral ? k : std::sin(k * spacing_[a]) / spacing_[a];
    }
  }

  RealBuffer rbuf(size_);
  Spectrum cbuf(sp.csize);
  auto* cptr = reinterpret_cast<fftw_complex*>(cbuf.data());
  std::lock_guard lock(fftw_planner_mutex());
  // ESTIMATE keeps plan selection, and hence roundoff, identical across runs.
  const unsigned flags = FFTW_ESTIMATE;
  sp.forward = fftw_plan_dft_r2c_3d(extents_[0], extents_[1], extents_[2], rbuf.data(), cptr, flags);
  sp.backward = fftw_plan_dft_c2r_3d(extents_[0], extents_[1], extents_[2], cptr, rbuf.data(), flags);
}

Grid::~Grid() = default;

double Grid::min_spacing() const {
  double h = spacing_[0];
  for (int a = 1; a < dim_; ++a) h = std::min(h, spacing_[a]);
  return h;
}

double Grid::cell_volume() const {
  double v = 1.0;
  for (int a = 0; a < dim_; ++a) v *= spacing_[a];
  return v;
}

double Grid::volume() const {
  double v = 1.0;
  for (int a = 0; a < dim_; ++a) v *= lengths_[a];
  return v;
}

std::array<double, 3> Grid::position(std::size_t index) const {
  const std::size_t k = index % extents_[2];
  const std::size_t j = (index / extents_[2]) % extents_[1];
  const std::size_t i = index / (static_cast<std::size_t>(extents_[1]) * extents_[2]);
  const std::array<std::size_t, 3> idx{i, j, k};
  std::array<double, 3> x{0.0, 0.0, 0.0};
  for (int a = 0; a < dim_; ++a) x[a] = static_cast<double>(idx[a]) * spacing_[a];
  return x;
}

bool Grid::same_as(const Grid& other) const {
  return this == &other ||
         (dim_ == other.dim_ && extents_ == other.extents_ && lengths_ == other.lengths_ && backend_ == other.backend_);
}

double Grid::max_frequency() const {
  double w2 = 0.0;
  for (int a = 0; a < 3; ++a) {
    double km = 0.0;
    for (double k : spectral_->kappa[a]) km = std::max(km, std::abs(k));
    w2 += km * km;
  }
  return std::sqrt(w2);
}

// ---------------------------------------------------------------------------
// Fields

ScalarField::ScalarField(GridPtr grid) : grid_(std::move(grid)), data_(grid_->size(), 0.0) {}

ScalarField::ScalarField(GridPtr grid, std::vector<double> values) : grid_(std::move(grid)), data_(std::move(values)) {
  if (data_.size() != grid_->size()) {
    throw Error(ErrorCode::invalid_field, "expected " + std::to_string(grid_->size()) + " samples, got " +
                                              std::to_string(data_.size()));
  }
}

ScalarField& ScalarField::operator+=(const ScalarField& other) { return add_scaled(1.0, other); }
ScalarField& ScalarField::operator-=(const ScalarField& other) { return add_scaled(-1.0, other); }

ScalarField& ScalarField::operator*=(double factor) {
  for (double& x : data_) x *= factor;
  return *this;
}

ScalarField& ScalarField::add_scaled(double factor, const ScalarField& other) {
  require_same_grid(*grid_, *other.grid_);
  const std::size_t n = data_.size();
  double* dst = data_.data();
  const double* src = other.data_.data();
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < n; ++i) dst[i] += factor * src[i];
  return *this;
}

ScalarField operator+(ScalarField lhs, const ScalarField& rhs) { return lhs += rhs; }
ScalarField operator-(ScalarField lhs, const ScalarField& rhs) { return lhs -= rhs; }
ScalarField operator-(ScalarField field) { return field *= -1.0; }
ScalarField operator*(double factor, ScalarField field) { return field *= factor; }

VectorField::VectorField(GridPtr grid) : components_{ScalarField(grid), ScalarField(grid), ScalarField(grid)} {}

VectorField::VectorField(ScalarField x, ScalarField y, ScalarField z)
    : components_{std::move(x), std::move(y), std::move(z)} {
  require_same_grid(components_[0].grid(), components_[1].grid());
  require_same_grid(components_[0].grid(), components_[2].grid());
}

VectorField& VectorField::operator+=(const VectorField& other) { return add_scaled(1.0, other); }
VectorField& VectorField::operator-=(const VectorField& other) { return add_scaled(-1.0, other); }

VectorField& VectorField::operator*=(double factor) {
  for (auto& c : components_) c *= factor;
  return *this;
}

VectorField& VectorField::add_scaled(double factor, const VectorField& other) {
  for (int c = 0; c < 3; ++c) components_[c].add_scaled(factor, other.components_[c]);
  return *this;
}

VectorField operator+(VectorField lhs, const VectorField& rhs) { return lhs += rhs; }
VectorField operator-(VectorField lhs, const VectorField& rhs) { return lhs -= rhs; }
VectorField operator-(VectorField field) { return field *= -1.0; }
VectorField operator*(double factor, VectorField field) { return field *= factor; }

void require_same_grid(const Grid& a, const Grid& b) {
  if (!a.same_as(b)) throw Error(ErrorCode::grid_mismatch, "fields live on different grids");
}

void require_finite(const ScalarField& f, std::string_view name) {
  for (double x : f.values()) {
    if (!std::isfinite(x)) throw Error(ErrorCode::invalid_field, std::string(name) + " has non-finite samples");
  }
}

void require_finite(const VectorField& f, std::string_view name) {
  for (int c = 0; c < 3; ++c) require_finite(f[c], name);
}

// ---------------------------------------------------------------------------
// Central differences

namespace {

// (f[i+1] - f[i-1]) / 2h along one axis, periodic.
ScalarField central_partial(const ScalarField& f, int axis) {
  const Grid& g = f.grid();
  ScalarField out(f.grid_ptr());
  if (axis >= g.dim()) return out;
  const auto& n = g.extents();
  const double inv2h = 0.5 / g.spacing(axis);
  const double* src = f.values().data();
  double* dst = out.values().data();
  // Treat the array as (outer, len, inner) with the differenced axis in the middle.
  const std::size_t len = n[axis];
  std::size_t inner = 1;
  for (int a = axis + 1; a < 3; ++a) inner *= n[a];
  const std::size_t outer = g.size() / (len * inner);
#pragma omp parallel for schedule(static)
  for (std::size_t o = 0; o < outer; ++o) {
    const std::size_t base = o * len * inner;
    for (std::size_t i = 0; i < len; ++i) {
      const double* hi = src + base + ((i + 1) % len) * inner;
      const double* lo = src + base + ((i + len - 1) % len) * inner;
      double* d = dst + base + i * inner;
      for (std::size_t k = 0; k < inner; ++k) d[k] = (hi[k] - lo[k]) * inv2h;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Spectral

Spectrum spectral_partial(const Grid::Spectral& sp, const Spectrum& in, int axis) {
  Spectrum out(in.size());
  sp.for_each_mode([&](int i, int j, int k, std::size_t n) {
    const std::array<int, 3> idx{i, j, k};
    out[n] = cplx(0.0, sp.kappa[axis][idx[axis]]) * in[n];
  });
  return out;
}

ScalarField from_spectrum(const GridPtr& grid, Spectrum s) {
  return ScalarField(grid, grid->spectral().inverse(std::move(s), grid->size()));
}

}  // namespace

ScalarField grad_component(const ScalarField& w, int axis) {
  require_finite(w, "gradient input");
  const Grid& g = w.grid();
  if (g.backend() == Backend::central2) return central_partial(w, axis);
  if (axis >= g.dim()) return ScalarField(w.grid_ptr());
  const auto& sp = g.spectral();
  return from_spectrum(w.grid_ptr(), spectral_partial(sp, sp.transform(w.values()), axis));
}

VectorField grad(const ScalarField& w) {
  require_finite(w, "gradient input");
  const Grid& g = w.grid();
  if (g.backend() == Backend::central2) {
    return VectorField(central_partial(w, 0), central_partial(w, 1), central_partial(w, 2));
  }
  const auto& sp = g.spectral();
  const Spectrum ws = sp.transform(w.values());
  VectorField out(w.grid_ptr());
  for (int a = 0; a < g.dim(); ++a) out[a] = from_spectrum(w.grid_ptr(), spectral_partial(sp, ws, a));
  return out;
}

ScalarField div(const VectorField& v) {
  require_finite(v, "divergence input");
  const Grid& g = v.grid();
  if (g.backend() == Backend::central2) {
    ScalarField out = central_partial(v[0], 0);
    for (int a = 1; a < g.dim(); ++a) out += central_partial(v[a], a);
    return out;
  }
  const auto& sp = g.spectral();
  Spectrum acc(sp.csize, cplx(0.0));
  for (int a = 0; a < g.dim(); ++a) {
    const Spectrum d = spectral_partial(sp, sp.transform(v[a].values()), a);
    for (std::size_t n = 0; n < acc.size(); ++n) acc[n] += d[n];
  }
  return from_spectrum(v.grid_ptr(), std::move(acc));
}

VectorField curl(const VectorField& v) {
  require_finite(v, "curl input");
  const Grid& g = v.grid();
  if (g.backend() == Backend::central2) {
    return VectorField(central_partial(v[2], 1) - central_partial(v[1], 2),
                       central_partial(v[0], 2) - central_partial(v[2], 0),
                       central_partial(v[1], 0) - central_partial(v[0], 1));
  }
  const auto& sp = g.spectral();
  std::array<Spectrum, 3> vs;
  for (int c = 0; c < 3; ++c) vs[c] = sp.transform(v[c].values());
  VectorField out(v.grid_ptr());
  for (int c = 0; c < 3; ++c) {
    const int p = (c + 1) % 3;
    const int q = (c + 2) % 3;
    // (curl v)_c = d_p v_q - d_q v_p
    Spectrum s(sp.csize);
    sp.for_each_mode([&](int i, int j, int k, std::size_t n) {
      const std::array<int, 3> idx{i, j, k};
      s[n] = cplx(0.0, 1.0) * (sp.kappa[p][idx[p]] * vs[q][n] - sp.kappa[q][idx[q]] * vs[p][n]);
    });
    out[c] = from_spectrum(v.grid_ptr(), std::move(s));
  }
  return out;
}

VectorField curl_curl(const VectorField& v) {
  require_finite(v, "curl input");
  const Grid& g = v.grid();
  // Both backends share this path: the central stencil's symbol is kappa = sin(kh)/h.
  const auto& sp = g.spectral();
  std::array<Spectrum, 3> vs;
  for (int c = 0; c < 3; ++c) vs[c] = sp.transform(v[c].values());
  std::array<Spectrum, 3> out;
  for (auto& s : out) s.assign(sp.csize, cplx(0.0));
  // curl curl = grad div - laplacian; the symbol is |kappa|^2 I - kappa kappa^T.
  sp.for_each_mode([&](int i, int j, int k, std::size_t n) {
    const std::array<double, 3> kv{sp.kappa[0][i], sp.kappa[1][j], sp.kappa[2][k]};
    const double k2 = kv[0] * kv[0] + kv[1] * kv[1] + kv[2] * kv[2];
    const cplx kdotv = kv[0] * vs[0][n] + kv[1] * vs[1][n] + kv[2] * vs[2][n];
    for (int c = 0; c < 3; ++c) out[c][n] = k2 * vs[c][n] - kv[c] * kdotv;
  });
  return VectorField(from_spectrum(v.grid_ptr(), std::move(out[0])), from_spectrum(v.grid_ptr(), std::move(out[1])),
                     from_spectrum(v.grid_ptr(), std::move(out[2])));
}

ScalarField laplacian(const ScalarField& w) {
  require_finite(w, "laplacian input");
  const Grid& g = w.grid();
  if (g.backend() == Backend::central2) {
    ScalarField out = central_partial(central_partial(w, 0), 0);
    for (int a = 1; a < g.dim(); ++a) out += central_partial(central_partial(w, a), a);
    return out;
  }
  const auto& sp = g.spectral();
  Spectrum s = sp.transform(w.values());
  sp.for_each_mode([&](int i, int j, int k, std::size_t n) { s[n] *= -sp.kappa2(i, j, k); });
  return from_spectrum(w.grid_ptr(), std::move(s));
}

VectorField laplacian(const VectorField& v) { return VectorField(laplacian(v[0]), laplacian(v[1]), laplacian(v[2])); }

namespace {

ScalarField solve_poisson(const ScalarField& w) {
  const auto& sp = w.grid().spectral();
  Spectrum s = sp.transform(w.values());
  sp.for_each_mode([&](int i, int j, int k, std::size_t n) {
    const double k2 = sp.kappa2(i, j, k);
    s[n] = k2 > 0.0 ? -s[n] / k2 : cplx(0.0);
  });
  return from_spectrum(w.grid_ptr(), std::move(s));
}

std::string format_value(double x) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << x;
  return os.str();
}

}  // namespace

ScalarField inv_laplacian(const ScalarField& w) {
  require_finite(w, "inverse laplacian input");
  const double scale = std::max(1.0, max_abs(w));
  const double m = mean(w);
  if (std::abs(m) > 1e-10 * scale) {
    throw Error(ErrorCode::unsolvable_on_torus, "source mean is " + format_value(m) + ", must be zero on a torus");
  }
  return solve_poisson(w);
}

VectorField inv_laplacian(const VectorField& v) {
  return VectorField(inv_laplacian(v[0]), inv_laplacian(v[1]), inv_laplacian(v[2]));
}

VectorField inv_curl(const VectorField& b) {
  require_finite(b, "inverse curl input");
  const double scale = std::max(1.0, max_abs(b));
  for (int c = 0; c < 3; ++c) {
    const double m = mean(b[c]);
    if (std::abs(m) > 1e-10 * scale) {
      throw Error(ErrorCode::unsolvable_on_torus,
                  "component " + std::to_string(c) + " has mean " + format_value(m) + ", must be zero on a torus");
    }
  }
  const double divergence = max_abs(div(b));
  if (divergence > 1e-8 * scale) {
    throw Error(ErrorCode::constraint_violation,
                "inverse curl needs a divergence-free field, max |div| = " + format_value(divergence));
  }
  // curl curl S = -laplacian S for divergence-free S, so S = curl(-laplacian^{-1} b).
  VectorField potential(b.grid_ptr());
  for (int c = 0; c < 3; ++c) potential[c] = -solve_poisson(b[c]);
  return curl(potential);
}

double inner(const ScalarField& f, const ScalarField& g) {
  require_same_grid(f.grid(), g.grid());
  const auto a = f.values();
  const auto b = g.values();
  double sum = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n) sum += a[n] * b[n];
  return sum * f.grid().cell_volume();
}

double inner(const VectorField& f, const VectorField& g) {
  return inner(f[0], g[0]) + inner(f[1], g[1]) + inner(f[2], g[2]);
}

double mean(const ScalarField& f) {
  double sum = 0.0;
  for (double x : f.values()) sum += x;
  return sum / static_cast<double>(f.size());
}

double max_abs(const ScalarField& f) {
  double m = 0.0;
  for (double x : f.values()) m = std::max(m, std::abs(x));
  return m;
}

double max_abs(const VectorField& f) { return std::max({max_abs(f[0]), max_abs(f[1]), max_abs(f[2])}); }

double rms(const ScalarField& f) {
  double sum = 0.0;
  for (double x : f.values()) sum += x * x;
  return std::sqrt(sum / static_cast<double>(f.size()));
}

double rms(const VectorField& f) {
  const double s = rms(f[0]) * rms(f[0]) + rms(f[1]) * rms(f[1]) + rms(f[2]) * rms(f[2]);
  return std::sqrt(s);
}

}  // namespace mxh
