#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <limits>
#include <vector>

#include "dprn/image.hpp"
#include "dprn/network.hpp"
#include "dprn/rng.hpp"

namespace dprn::testing {

/// Central finite differences of a scalar function, the oracle all analytic
/// gradients are checked against.
inline Eigen::VectorXd finite_difference_gradient(
    const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
    double h = 1e-6) {
    Eigen::VectorXd g(x.size());
    Eigen::VectorXd xp = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double orig = xp(i);
        xp(i) = orig + h;
        const double fp = f(xp);
        xp(i) = orig - h;
        const double fm = f(xp);
        xp(i) = orig;
        g(i) = (fp - fm) / (2.0 * h);
    }
    return g;
}

inline double symmetric_relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const double denom = std::max(1.0, std::max(a.norm(), b.norm()));
    return (a - b).norm() / denom;
}

struct RandomNetOptions {
    int max_hidden_layers = 3;
    Eigen::Index max_width = 8;
    bool dual_only = false;   // all hidden layers DualPathway
    bool tied = false;        // single hidden layer, in == out
    double param_scale = 1.0;
};

/// Small random network with random finite parameters (weights, biases and
/// thresholds all non-trivial).
inline Network random_network(Rng& rng, const RandomNetOptions& opt = {}) {
    const auto dim = [&](Eigen::Index lo = 1) {
        return lo + static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(opt.max_width)));
    };
    const Eigen::Index in = dim(2);
    const Eigen::Index out = opt.tied ? in : dim(1);
    const int n_hidden = opt.tied ? 1 : 1 + static_cast<int>(rng.below(opt.max_hidden_layers));
    std::vector<Eigen::Index> hidden;
    for (int i = 0; i < n_hidden; ++i) hidden.push_back(dim(2));

    Activation act = Activation::DualPathway;
    if (!opt.dual_only) {
        constexpr Activation kinds[] = {Activation::Tanh, Activation::Rectifier,
                                        Activation::DualPathway};
        act = kinds[rng.below(3)];
    }
    Network net = Network::make_mlp(in, hidden, out, act, opt.tied);
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        if (!net.tied(l)) {
            auto& W = net.weight(l);
            for (Eigen::Index r = 0; r < W.rows(); ++r)
                for (Eigen::Index c = 0; c < W.cols(); ++c)
                    W(r, c) = (2.0 * rng.uniform() - 1.0) * opt.param_scale;
        }
        auto& b = net.bias(l);
        for (Eigen::Index i = 0; i < b.size(); ++i)
            b(i) = (2.0 * rng.uniform() - 1.0) * 0.5 * opt.param_scale;
        if (net.layers()[l].activation == Activation::DualPathway) {
            auto& t = net.thresholds(l);
            for (Eigen::Index i = 0; i < t.size(); ++i)
                t(i) = (2.0 * rng.uniform() - 1.0) * 0.5 * opt.param_scale;
        }
    }
    return net;
}

inline Eigen::MatrixXd random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols,
                                     double scale = 1.0) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = (2.0 * rng.uniform() - 1.0) * scale;
    return m;
}

/// Smallest distance of any pre-activation in the cache to an activation
/// kink; finite-difference checks sample only points safely away from them.
inline double kink_margin(const Network& net, const ForwardCache& cache) {
    double margin = std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        const auto& Z = cache.pre_activations[l];
        switch (net.layers()[l].activation) {
            case Activation::Rectifier:
                margin = std::min(margin, Z.array().abs().minCoeff());
                break;
            case Activation::DualPathway: {
                const auto& t = net.thresholds(l);
                const Eigen::ArrayXXd zp = (Z.rowwise() + t.transpose()).array().abs();
                const Eigen::ArrayXXd zn = ((-Z).rowwise() + t.transpose()).array().abs();
                margin = std::min({margin, zp.minCoeff(), zn.minCoeff()});
                break;
            }
            default:
                break;
        }
    }
    return margin;
}

/// Piecewise-smooth grayscale test scene: a gently varying background with
/// randomly placed ellipses and rectangles of both polarities plus a faint
/// sinusoidal texture. Stands in for a natural-image corpus in tests.
inline GrayImage synthetic_image(std::uint64_t seed, int h, int w) {
    Rng rng(seed);
    GrayImage img(h, w);
    const double base = 0.3 + 0.4 * rng.uniform();
    const double gx = (rng.uniform() - 0.5) * 0.4 / w;
    const double gy = (rng.uniform() - 0.5) * 0.4 / h;
    const double fr = 2.0 * 3.14159265358979 * (1.0 + rng.below(4)) / h;
    const double fc = 2.0 * 3.14159265358979 * (1.0 + rng.below(4)) / w;
    const double pr = rng.uniform() * 6.28, pc = rng.uniform() * 6.28;
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
            img.at(r, c) = base + gx * (c - w / 2) + gy * (r - h / 2) +
                           0.05 * std::sin(fr * r + pr) + 0.05 * std::sin(fc * c + pc);

    const int n_shapes = 12 + static_cast<int>(rng.below(10));
    for (int s = 0; s < n_shapes; ++s) {
        const double level = 0.1 + 0.8 * rng.uniform();
        const double sgx = (rng.uniform() - 0.5) * 0.3 / std::max(h, w);
        if (rng.below(2) == 0) {  // rotated ellipse
            const double cr = rng.uniform() * h, cc = rng.uniform() * w;
            const double ra = 3.0 + rng.uniform() * h / 4.0;
            const double rb = 3.0 + rng.uniform() * w / 4.0;
            const double th = rng.uniform() * 3.14159265358979;
            const double ct = std::cos(th), st = std::sin(th);
            const int r0 = std::max(0, static_cast<int>(cr - ra - rb));
            const int r1 = std::min(h, static_cast<int>(cr + ra + rb) + 1);
            const int c0 = std::max(0, static_cast<int>(cc - ra - rb));
            const int c1 = std::min(w, static_cast<int>(cc + ra + rb) + 1);
            for (int r = r0; r < r1; ++r)
                for (int c = c0; c < c1; ++c) {
                    const double dr = r - cr, dc = c - cc;
                    const double u = (dr * ct + dc * st) / ra;
                    const double v = (-dr * st + dc * ct) / rb;
                    if (u * u + v * v <= 1.0) img.at(r, c) = level + sgx * (r + c);
                }
        } else {  // axis-aligned rectangle
            const int rh = 4 + static_cast<int>(rng.below(static_cast<std::uint64_t>(h / 3)));
            const int rw = 4 + static_cast<int>(rng.below(static_cast<std::uint64_t>(w / 3)));
            const int r0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(std::max(1, h - rh))));
            const int c0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(std::max(1, w - rw))));
            for (int r = r0; r < std::min(h, r0 + rh); ++r)
                for (int c = c0; c < std::min(w, c0 + rw); ++c)
                    img.at(r, c) = level + sgx * (r + c);
        }
    }
    for (double& v : img.pixels) v = std::clamp(v, 0.02, 0.98);
    return img;
}

/// Writes `count` synthetic images into dir as PGM files (img00.pgm, ...).
void write_synthetic_corpus(const std::filesystem::path& dir, int count, int h, int w,
                            std::uint64_t seed);

/// Single Linear layer picking the central output block out of the input
/// patch: the identity-behaving denoiser used as a pipeline oracle.
inline Network center_projection_network(int input_size, int output_size) {
    const Eigen::Index d_in = static_cast<Eigen::Index>(input_size) * input_size;
    const Eigen::Index d_out = static_cast<Eigen::Index>(output_size) * output_size;
    Network net = Network::make_mlp(d_in, {}, d_out, Activation::Linear);
    auto& W = net.weight(0);
    W.setZero();
    const int m = (input_size - output_size) / 2;
    for (int r = 0; r < output_size; ++r)
        for (int c = 0; c < output_size; ++c)
            W(static_cast<Eigen::Index>(r) * output_size + c,
              static_cast<Eigen::Index>(m + r) * input_size + (m + c)) = 1.0;
    return net;
}

}  // namespace dprn::testing
