#pragma once

// Periodic uniform grids in one to three dimensions, the sampled fields that
// live on them, and the discrete differential calculus acting on those fields.

#include <array>
#include <cstddef>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "mxh/error.hpp"

namespace mxh {

enum class Backend { spectral, central2 };

std::string_view to_string(Backend backend);
Backend backend_from_string(std::string_view name);

class Grid;
using GridPtr = std::shared_ptr<const Grid>;

/// Periodic box sampled at `points[a]` nodes along each present axis, with
/// nodes at x = i * h. Axes beyond `dim()` are stored with extent 1 and carry
/// no derivatives.
class Grid {
 public:
  static GridPtr make(std::vector<int> points, std::vector<double> lengths, Backend backend);

  ~Grid();
  Grid(const Grid&) = delete;
  Grid& operator=(const Grid&) = delete;

  int dim() const { return dim_; }
  Backend backend() const { return backend_; }
  const std::array<int, 3>& extents() const { return extents_; }
  const std::array<double, 3>& lengths() const { return lengths_; }
  double spacing(int axis) const { return spacing_[axis]; }
  double min_spacing() const;
  std::size_t size() const { return size_; }
  /// Quadrature weight of one node: product of the spacings of present axes.
  double cell_volume() const;
  double volume() const;

  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * extents_[1] + j) * extents_[2] + k;
  }
  std::array<double, 3> position(std::size_t index) const;

  bool same_as(const Grid& other) const;

  /// Largest |symbol| of the discrete curl-curl operator, square-rooted: the
  /// fastest resolved wave frequency in light-speed units.
  double max_frequency() const;

  struct Spectral;
  const Spectral& spectral() const { return *spectral_; }

 private:
  Grid(int dim, std::array<int, 3> extents, std::array<double, 3> lengths, Backend backend);

  int dim_;
  std::array<int, 3> extents_;
  std::array<double, 3> lengths_;
  std::array<double, 3> spacing_;
  std::size_t size_;
  Backend backend_;
  std::unique_ptr<Spectral> spectral_;
};

class ScalarField {
 public:
  explicit ScalarField(GridPtr grid);
  ScalarField(GridPtr grid, std::vector<double> values);

  template <class Fn>
  static ScalarField from_function(const GridPtr& grid, Fn&& fn) {
    ScalarField out(grid);
    for (std::size_t n = 0; n < grid->size(); ++n) {
      const auto x = grid->position(n);
      out.data_[n] = fn(x[0], x[1], x[2]);
    }
    return out;
  }

  const Grid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  std::size_t size() const { return data_.size(); }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  double& operator[](std::size_t n) { return data_[n]; }
  double operator[](std::size_t n) const { return data_[n]; }

  ScalarField& operator+=(const ScalarField& other);
  ScalarField& operator-=(const ScalarField& other);
  ScalarField& operator*=(double factor);
  /// this += factor * other
  ScalarField& add_scaled(double factor, const ScalarField& other);

 private:
  GridPtr grid_;
  std::vector<double> data_;
};

ScalarField operator+(ScalarField lhs, const ScalarField& rhs);
ScalarField operator-(ScalarField lhs, const ScalarField& rhs);
ScalarField operator-(ScalarField field);
ScalarField operator*(double factor, ScalarField field);

/// Three components on a shared grid. Components along absent axes are
/// carried and evolved like the others.
class VectorField {
 public:
  explicit VectorField(GridPtr grid);
  VectorField(ScalarField x, ScalarField y, ScalarField z);

  template <class Fn>
  static VectorField from_function(const GridPtr& grid, Fn&& fn) {
    VectorField out(grid);
    for (std::size_t n = 0; n < grid->size(); ++n) {
      const auto x = grid->position(n);
      const std::array<double, 3> v = fn(x[0], x[1], x[2]);
      for (int c = 0; c < 3; ++c) out.components_[c][n] = v[c];
    }
    return out;
  }

  const Grid& grid() const { return components_[0].grid(); }
  const GridPtr& grid_ptr() const { return components_[0].grid_ptr(); }

  ScalarField& operator[](int c) { return components_[c]; }
  const ScalarField& operator[](int c) const { return components_[c]; }

  VectorField& operator+=(const VectorField& other);
  VectorField& operator-=(const VectorField& other);
  VectorField& operator*=(double factor);
  VectorField& add_scaled(double factor, const VectorField& other);

 private:
  std::array<ScalarField, 3> components_;
};

VectorField operator+(VectorField lhs, const VectorField& rhs);
VectorField operator-(VectorField lhs, const VectorField& rhs);
VectorField operator-(VectorField field);
VectorField operator*(double factor, VectorField field);

void require_same_grid(const Grid& a, const Grid& b);
void require_finite(const ScalarField& f, std::string_view name);
void require_finite(const VectorField& f, std::string_view name);

ScalarField grad_component(const ScalarField& w, int axis);
VectorField grad(const ScalarField& w);
ScalarField div(const VectorField& v);
VectorField curl(const VectorField& v);
/// curl(curl(v)) in one pass; identical to the composition up to roundoff.
VectorField curl_curl(const VectorField& v);
ScalarField laplacian(const ScalarField& w);
VectorField laplacian(const VectorField& v);

/// Zero-mean solution of laplacian(u) = w. Modes in the kernel of the
/// discrete Laplacian (the mean and, per backend, the unresolvable
/// checkerboard modes) are dropped from the result.
ScalarField inv_laplacian(const ScalarField& w);
VectorField inv_laplacian(const VectorField& v);

/// Divergence-free zero-mean S with curl(S) = b.
VectorField inv_curl(const VectorField& b);

double inner(const ScalarField& f, const ScalarField& g);
double inner(const VectorField& f, const VectorField& g);

double mean(const ScalarField& f);
double max_abs(const ScalarField& f);
double max_abs(const VectorField& f);
/// Root-mean-square over grid nodes.
double rms(const ScalarField& f);
double rms(const VectorField& f);

}  // namespace mxh
