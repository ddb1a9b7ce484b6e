#include "mxh/initial_data.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace mxh {

ScalarField random_band_limited(const GridPtr& grid, int max_mode, std::uint64_t seed, double amplitude) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);

  const int dim = grid->dim();
  std::array<int, 3> lo{0, 0, 0};
  std::array<int, 3> hi{0, 0, 0};
  for (int a = 0; a < dim; ++a) {
    lo[a] = -max_mode;
    hi[a] = max_mode;
  }
  // Only keep modes whose last present index is > 0, or the first nonzero
  // index is positive: each real cosine mode counted once.
  ScalarField out(grid);
  for (int mx = lo[0]; mx <= hi[0]; ++mx) {
    for (int my = lo[1]; my <= hi[1]; ++my) {
      for (int mz = lo[2]; mz <= hi[2]; ++mz) {
        const std::array<int, 3> m{mx, my, mz};
        int first = 0;
        for (int a = 0; a < 3 && first == 0; ++a) first = m[a];
        if (first <= 0) continue;
        const double m2 = mx * mx + my * my + mz * mz;
        const double c = unit(rng) / (1.0 + m2);
        const double ph = phase(rng);
        std::array<double, 3> k{0.0, 0.0, 0.0};
        for (int a = 0; a < dim; ++a) k[a] = 2.0 * std::numbers::pi * m[a] / grid->lengths()[a];
        for (std::size_t n = 0; n < grid->size(); ++n) {
          const auto x = grid->position(n);
          out[n] += c * std::cos(k[0] * x[0] + k[1] * x[1] + k[2] * x[2] + ph);
        }
      }
    }
  }
  const double peak = max_abs(out);
  if (peak > 0.0) out *= amplitude / peak;
  return out;
}

VectorField random_band_limited_vector(const GridPtr& grid, int max_mode, std::uint64_t seed, double amplitude) {
  return VectorField(random_band_limited(grid, max_mode, seed * 3 + 0, amplitude),
                     random_band_limited(grid, max_mode, seed * 3 + 1, amplitude),
                     random_band_limited(grid, max_mode, seed * 3 + 2, amplitude));
}

}  // namespace mxh
