#include "dprn/noise.hpp"

#include "dprn/rng.hpp"

namespace dprn {

GrayImage add_awgn(const GrayImage& img, const NoiseSpec& spec) {
    if (!(spec.sigma_255 > 0.0)) throw ContractError("sigma_255 must be positive");
    Rng rng(spec.seed);
    const double sigma = spec.sigma_255 / 255.0;
    GrayImage out = img;
    for (double& v : out.pixels) v += sigma * rng.normal();
    return out;
}

}  // namespace dprn
