#pragma once

#include <cstdint>

#include "mxh/grid.hpp"

namespace mxh {

/// Zero-mean random field built from Fourier modes with |m_a| <= max_mode on
/// every present axis, mode amplitudes falling off as 1/(1 + |m|^2). The
/// largest sample is normalized to `amplitude`.
ScalarField random_band_limited(const GridPtr& grid, int max_mode, std::uint64_t seed, double amplitude = 1.0);
VectorField random_band_limited_vector(const GridPtr& grid, int max_mode, std::uint64_t seed, double amplitude = 1.0);

}  // namespace mxh
