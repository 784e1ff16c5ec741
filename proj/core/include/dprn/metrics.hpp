#pragma once

#include "dprn/image.hpp"

namespace dprn {

/// 10*log10(255^2 / sigma_e^2) where sigma_e^2 is the mean squared error on
/// the 0-255 scale. Identical images report +infinity.
double psnr(const GrayImage& reference, const GrayImage& test);

/// Root mean squared error on the [0,1] intensity scale.
double rmse(const GrayImage& reference, const GrayImage& test);

}  // namespace dprn
