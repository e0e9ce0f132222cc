#pragma once

// Synthetic test images with values in [0, 1], vectorized row-major.

#include <cstdint>
#include <string>

#include "slm/linops.hpp"

namespace slm::app {

/// Piecewise-constant ellipses: a fixed head-like layout with seeded jitter.
Vector make_phantom(Index side, std::uint64_t seed);

/// Random smooth field plus a few sharp ridges and steps.
Vector make_smooth_edges(Index side, std::uint64_t seed);

/// "phantom" or "smooth_edges" (also "smooth+edges"); FormatError otherwise.
Vector make_synthetic(const std::string& generator, Index side, std::uint64_t seed);

}  // namespace slm::app
