#include <doctest.h>

#include <cmath>

#include "dprn/metrics.hpp"
#include "dprn/noise.hpp"
#include "support.hpp"

using namespace dprn;
using namespace dprn::testing;

TEST_CASE("awgn sample statistics match the requested sigma") {
    const GrayImage clean = synthetic_image(1, 512, 512);
    const GrayImage noisy = add_awgn(clean, {25.0, 99});
    double sum = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < clean.size(); ++i) {
        const double d = noisy.pixels[i] - clean.pixels[i];
        sum += d;
        sq += d * d;
    }
    const double n = static_cast<double>(clean.size());
    const double mean = sum / n;
    const double std_dev = std::sqrt(sq / n - mean * mean);
    const double sigma = 25.0 / 255.0;
    CHECK(std::abs(std_dev - sigma) / sigma < 0.02);           // within 2%
    CHECK(std::abs(mean) < 3.0 * sigma / std::sqrt(n));        // mean-zero bound
}

TEST_CASE("awgn is deterministic per seed and unclipped") {
    const GrayImage clean = synthetic_image(2, 64, 64);
    const GrayImage a = add_awgn(clean, {75.0, 7});
    const GrayImage b = add_awgn(clean, {75.0, 7});
    CHECK(a.pixels == b.pixels);
    const GrayImage c = add_awgn(clean, {75.0, 8});
    CHECK(a.pixels != c.pixels);
    // sigma 75/255 on [0.02, 0.98] content produces out-of-range values
    double lo = 1e9, hi = -1e9;
    for (double v : a.pixels) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    CHECK(lo < 0.0);
    CHECK(hi > 1.0);
}

TEST_CASE("vanishing sigma leaves the image unchanged in the limit") {
    const GrayImage clean = synthetic_image(3, 32, 32);
    const GrayImage noisy = add_awgn(clean, {1e-9, 5});
    double worst = 0.0;
    for (std::size_t i = 0; i < clean.size(); ++i)
        worst = std::max(worst, std::abs(noisy.pixels[i] - clean.pixels[i]));
    CHECK(worst < 1e-9);
    CHECK_THROWS_AS(add_awgn(clean, {0.0, 5}), ContractError);
}

TEST_CASE("psnr reproduces the reference noisy-baseline values") {
    const GrayImage clean = synthetic_image(4, 384, 384);
    CHECK(psnr(clean, add_awgn(clean, {25.0, 11})) == doctest::Approx(20.17).epsilon(0.01));
    CHECK(psnr(clean, add_awgn(clean, {15.0, 12})) == doctest::Approx(24.61).epsilon(0.01));
    CHECK(psnr(clean, add_awgn(clean, {100.0, 13})) == doctest::Approx(8.13).epsilon(0.01));
}

TEST_CASE("psnr edge cases and symmetry") {
    GrayImage zero(8, 8, 0.0), one(8, 8, 1.0);
    CHECK(psnr(zero, one) == 0.0);  // sigma_e = 255
    CHECK(std::isinf(psnr(zero, zero)));
    const GrayImage a = synthetic_image(5, 32, 32);
    const GrayImage b = add_awgn(a, {50.0, 3});
    CHECK(psnr(a, b) == psnr(b, a));
    CHECK(rmse(a, b) == rmse(b, a));
    CHECK(rmse(zero, one) == 1.0);  // [0,1] scale
    CHECK_THROWS_AS(psnr(zero, GrayImage(4, 4)), ContractError);
}

TEST_CASE("psnr strictly decreases as sigma grows") {
    const GrayImage clean = synthetic_image(6, 128, 128);
    for (std::uint64_t seed : {21ULL, 22ULL, 23ULL}) {
        double prev = std::numeric_limits<double>::infinity();
        for (double sigma : {15.0, 25.0, 35.0, 50.0, 75.0, 100.0}) {
            const double p = psnr(clean, add_awgn(clean, {sigma, seed}));
            CHECK(p < prev);
            prev = p;
        }
    }
}
