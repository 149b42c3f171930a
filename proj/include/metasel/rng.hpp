#pragma once

// Deterministic random draws. All stochastic code takes an explicit Rng so
// identical seeds give bit-identical runs; normals go through the inverse
// CDF to stay independent of library distribution internals.

#include <cstdint>
#include <random>

#include "metasel/normal.hpp"

namespace metasel {

using Rng = std::mt19937_64;

/// Uniform draw strictly inside (0,1), 53-bit resolution.
inline double uniform01(Rng& rng) {
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

/// Standard normal draw by inverse-CDF transform.
inline double normal01(Rng& rng) {
    return std_normal_quantile(uniform01(rng));
}

} // namespace metasel
