#include <benchmark/benchmark.h>

#include "dprn/dictionary.hpp"
#include "dprn/metrics.hpp"
#include "dprn/noise.hpp"
#include "dprn/patches.hpp"
#include "dprn/rng.hpp"

using namespace dprn;

namespace {

GrayImage random_image(int h, int w, std::uint64_t seed) {
    Rng rng(seed);
    GrayImage img(h, w);
    for (double& v : img.pixels) v = rng.uniform();
    return img;
}

void BM_add_awgn_512(benchmark::State& state) {
    const GrayImage img = random_image(512, 512, 1);
    std::uint64_t seed = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(add_awgn(img, {25.0, seed++}));
    }
    state.SetItemsProcessed(state.iterations() * img.size());
}
BENCHMARK(BM_add_awgn_512);

void BM_psnr_512(benchmark::State& state) {
    const GrayImage a = random_image(512, 512, 2);
    const GrayImage b = add_awgn(a, {25.0, 3});
    for (auto _ : state) {
        benchmark::DoNotOptimize(psnr(a, b));
    }
}
BENCHMARK(BM_psnr_512);

void BM_extract_patches(benchmark::State& state) {
    const GrayImage img = random_image(512, 512, 4);
    const PatchGrid grid =
        PatchGrid::cover(512, 512, 17, 9, static_cast<int>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(extract_patches(img, grid));
    }
    state.SetItemsProcessed(state.iterations() *
                            static_cast<std::int64_t>(grid.positions.size()));
}
BENCHMARK(BM_extract_patches)->Arg(3)->Arg(1);

void BM_denoise_512(benchmark::State& state) {
    const GrayImage noisy = add_awgn(random_image(512, 512, 5), {25.0, 6});
    Network net = Network::make_mlp(289, {128, 128}, 81, Activation::DualPathway);
    initialize_parameters(net, 7);
    const PatchGrid grid = PatchGrid::cover(512, 512, 17, 9, 3);
    const int threads = static_cast<int>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(denoise_image(net, noisy, grid, threads));
    }
}
BENCHMARK(BM_denoise_512)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

void BM_greedy_pair_sort(benchmark::State& state) {
    Rng rng(8);
    Dictionary dict;
    dict.atoms.resize(100, state.range(0));
    for (Eigen::Index i = 0; i < dict.atoms.size(); ++i)
        dict.atoms.data()[i] = rng.uniform() - 0.5;
    for (auto _ : state) {
        benchmark::DoNotOptimize(greedy_pair_sort(dict));
    }
}
BENCHMARK(BM_greedy_pair_sort)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);

}  // namespace
