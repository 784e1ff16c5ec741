#pragma once

#include <cstdint>

#include "dprn/image.hpp"

namespace dprn {

struct NoiseSpec {
    double sigma_255 = 25.0;  // noise std on the 0-255 scale
    std::uint64_t seed = 0;
};

/// Adds i.i.d. N(0, (sigma_255/255)^2) to every pixel, row-major order, from
/// a generator seeded with spec.seed. The result is NOT clipped: clipping
/// would alter the noise distribution the network trains on; only the 8-bit
/// PGM writer clamps.
GrayImage add_awgn(const GrayImage& img, const NoiseSpec& spec);

}  // namespace dprn
