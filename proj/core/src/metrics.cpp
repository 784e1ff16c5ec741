#include "dprn/metrics.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace dprn {
namespace {

double mean_squared_error(const GrayImage& a, const GrayImage& b) {
    if (!a.same_dims(b))
        throw ContractError("image dims differ: " + std::to_string(a.height) + "x" +
                            std::to_string(a.width) + " vs " + std::to_string(b.height) + "x" +
                            std::to_string(b.width));
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a.pixels[i] - b.pixels[i];
        acc += d * d;
    }
    return acc / static_cast<double>(a.size());
}

}  // namespace

double psnr(const GrayImage& reference, const GrayImage& test) {
    const double mse = mean_squared_error(reference, test);
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    const double sigma_e2 = mse * 255.0 * 255.0;
    return 10.0 * std::log10(255.0 * 255.0 / sigma_e2);
}

double rmse(const GrayImage& reference, const GrayImage& test) {
    return std::sqrt(mean_squared_error(reference, test));
}

}  // namespace dprn
