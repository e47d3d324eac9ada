#pragma once

#include <cstdint>
#include <random>

#include "snfit/distributions.hpp"

namespace snfit {

/// Uniform on the open interval (0, 1) from the top 53 bits of one draw.
/// Written out so that simulated datasets are identical across standard
/// libraries, which std::uniform_real_distribution does not promise.
inline double uniform_open(std::mt19937_64& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

/// Standardized error draw by inversion.
inline double draw_std(StdDist d, std::mt19937_64& rng) { return std_quantile(d, uniform_open(rng)); }

}  // namespace snfit
