#pragma once

#include <vector>

#include "dprn/errors.hpp"

namespace dprn {

/// 2-D grayscale intensity field, row-major, nominal range [0,1]. Values
/// outside the range are allowed (unclipped noisy images); only the 8-bit
/// writer clamps.
struct GrayImage {
    int height = 0;
    int width = 0;
    std::vector<double> pixels;

    GrayImage() = default;
    GrayImage(int h, int w, double fill = 0.0)
        : height(h), width(w), pixels(static_cast<std::size_t>(h) * w, fill) {
        if (h <= 0 || w <= 0) throw ContractError("image dims must be positive");
    }

    double& at(int r, int c) { return pixels[static_cast<std::size_t>(r) * width + c]; }
    double at(int r, int c) const { return pixels[static_cast<std::size_t>(r) * width + c]; }

    std::size_t size() const { return pixels.size(); }
    bool same_dims(const GrayImage& other) const {
        return height == other.height && width == other.width;
    }
};

}  // namespace dprn
