#include <benchmark/benchmark.h>

#include "dprn/lbfgs.hpp"
#include "dprn/network.hpp"
#include "dprn/rng.hpp"
#include "dprn/trainer.hpp"

using namespace dprn;

namespace {

Eigen::MatrixXd random_batch(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
    Rng rng(seed);
    Eigen::MatrixXd X(n, d);
    for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = rng.uniform() - 0.5;
    return X;
}

// the paper-scale denoiser stack: 289 -> 512x4 -> 81
Network paper_network() {
    Network net = Network::make_mlp(289, {512, 512, 512, 512}, 81, Activation::DualPathway);
    initialize_parameters(net, 1);
    return net;
}

void BM_forward_paper_arch(benchmark::State& state) {
    const Network net = paper_network();
    const Eigen::MatrixXd X = random_batch(state.range(0), 289, 2);
    for (auto _ : state) {
        benchmark::DoNotOptimize(forward(net, X));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_forward_paper_arch)->Arg(1000)->Arg(10000);

void BM_forward_backward_paper_arch(benchmark::State& state) {
    const Network net = paper_network();
    const Eigen::MatrixXd X = random_batch(state.range(0), 289, 3);
    const Eigen::MatrixXd Y = random_batch(state.range(0), 81, 4);
    for (auto _ : state) {
        ForwardCache cache;
        const Eigen::MatrixXd Y_hat = forward(net, X, &cache);
        auto [loss, dY] = mse_loss(Y_hat, Y);
        benchmark::DoNotOptimize(backward(net, cache, dY));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_forward_backward_paper_arch)->Arg(1000)->Arg(10000);

void BM_batch_objective_threads(benchmark::State& state) {
    Network net = Network::make_mlp(289, {128, 128}, 81, Activation::DualPathway);
    initialize_parameters(net, 5);
    const Eigen::MatrixXd X = random_batch(10000, 289, 6);
    const Eigen::MatrixXd Y = random_batch(10000, 81, 7);
    BatchObjective obj(net, X, Y, static_cast<int>(state.range(0)));
    const Eigen::VectorXd flat = net.flatten();
    Eigen::VectorXd grad;
    for (auto _ : state) {
        benchmark::DoNotOptimize(obj(flat, grad));
    }
}
BENCHMARK(BM_batch_objective_threads)->Arg(1)->Arg(2);

void BM_expand_dual(benchmark::State& state) {
    Network net = Network::make_mlp(289, {512}, 81, Activation::DualPathway);
    initialize_parameters(net, 8);
    for (auto _ : state) {
        benchmark::DoNotOptimize(expand_dual(net));
    }
}
BENCHMARK(BM_expand_dual);

void BM_lbfgs_quadratic_100d(benchmark::State& state) {
    Rng rng(9);
    const Eigen::Index n = 100;
    Eigen::MatrixXd G(n, n);
    for (Eigen::Index i = 0; i < G.size(); ++i) G.data()[i] = rng.uniform() - 0.5;
    const Eigen::MatrixXd A = G.transpose() * G + Eigen::MatrixXd::Identity(n, n);
    const Eigen::VectorXd b = Eigen::VectorXd::Ones(n);
    auto f = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
        g = A * x - b;
        return 0.5 * x.dot(A * x) - b.dot(x);
    };
    LBFGSConfig cfg;
    cfg.max_iterations = 200;
    cfg.grad_tolerance = 1e-8;
    for (auto _ : state) {
        benchmark::DoNotOptimize(lbfgs_minimize(f, Eigen::VectorXd::Zero(n), cfg));
    }
}
BENCHMARK(BM_lbfgs_quadratic_100d);

}  // namespace

BENCHMARK_MAIN();
