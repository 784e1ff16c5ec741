#include <doctest.h>

#include "dprn/activation.hpp"
#include "support.hpp"

using namespace dprn;

namespace {

Eigen::VectorXd vec1(double v) { return Eigen::VectorXd::Constant(1, v); }

double g_scalar(double z, double t) {
    return activation_eval(ActivationKind::dual_pathway(vec1(t)), vec1(z))(0);
}

}  // namespace

TEST_CASE("dual-pathway evaluation matches its definition") {
    CHECK(g_scalar(1.0, 1.0) == doctest::Approx(2.0));
    CHECK(g_scalar(0.5, -1.0) == 0.0);   // dead zone
    CHECK(g_scalar(2.0, -1.0) == 1.0);   // shrinkage
    CHECK(g_scalar(-2.0, -1.0) == -1.0);
}

TEST_CASE("dual-pathway with t = 0 is exactly the identity") {
    Rng rng(7);
    for (int i = 0; i < 1000; ++i) {
        const double x = (rng.uniform() - 0.5) * 200.0;
        CHECK(g_scalar(x, 0.0) == x);  // bitwise
    }
    CHECK(g_scalar(0.0, 0.0) == 0.0);
}

TEST_CASE("dual-pathway is antisymmetric and monotone") {
    Rng rng(11);
    for (int i = 0; i < 200; ++i) {
        const double t = (rng.uniform() - 0.5) * 4.0;
        double prev = -std::numeric_limits<double>::infinity();
        for (int k = 0; k < 200; ++k) {
            const double x = -5.0 + 10.0 * k / 199.0;
            const double g = g_scalar(x, t);
            CHECK(g_scalar(-x, t) == -g);  // exact: the two max() terms swap
            CHECK(g >= prev);
            prev = g;
        }
    }
}

TEST_CASE("rectifier and linear evaluation") {
    Eigen::VectorXd z(3);
    z << -3.0, 0.0, 2.5;
    const Eigen::VectorXd r = activation_eval(ActivationKind::rectifier(), z);
    CHECK(r(0) == 0.0);
    CHECK(r(1) == 0.0);
    CHECK(r(2) == 2.5);
    CHECK(activation_eval(ActivationKind::linear(), z) == z);
    const Eigen::VectorXd th = activation_eval(ActivationKind::tanh(), z);
    CHECK(th(2) == doctest::Approx(std::tanh(2.5)));
}

TEST_CASE("analytic activation gradients at hand-checked points") {
    auto grad = [](double z, double t) {
        return activation_grad(ActivationKind::dual_pathway(vec1(t)), vec1(z));
    };
    {
        const auto g = grad(2.0, -1.0);  // only the first branch active
        CHECK(g.dz(0) == 1.0);
        CHECK((*g.dt)(0) == 1.0);
    }
    {
        const auto g = grad(0.3, 1.0);  // both branches active: slope-2 region
        CHECK(g.dz(0) == 2.0);
        CHECK((*g.dt)(0) == 0.0);
    }
    {
        const auto g = grad(-2.0, -1.0);  // only the mirrored branch active
        CHECK(g.dz(0) == 1.0);
        CHECK((*g.dt)(0) == -1.0);
    }
    {  // kink convention H(0) = 1
        const auto g = activation_grad(ActivationKind::rectifier(), vec1(0.0));
        CHECK(g.dz(0) == 1.0);
        CHECK(!g.dt.has_value());
    }
}

TEST_CASE("activation gradients match central finite differences away from kinks") {
    Rng rng(23);
    const double h = 1e-6;
    int checked = 0;
    while (checked < 500) {
        const double z = (rng.uniform() - 0.5) * 6.0;
        const double t = (rng.uniform() - 0.5) * 3.0;
        if (std::abs(z + t) < 1e-4 || std::abs(t - z) < 1e-4) continue;
        ++checked;
        const auto g = activation_grad(ActivationKind::dual_pathway(vec1(t)), vec1(z));
        const double fd_z = (g_scalar(z + h, t) - g_scalar(z - h, t)) / (2.0 * h);
        const double fd_t = (g_scalar(z, t + h) - g_scalar(z, t - h)) / (2.0 * h);
        CHECK(std::abs(g.dz(0) - fd_z) / std::max(1.0, std::abs(fd_z)) < 1e-8);
        CHECK(std::abs((*g.dt)(0) - fd_t) / std::max(1.0, std::abs(fd_t)) < 1e-8);
    }
}

TEST_CASE("threshold length must match the unit count") {
    Eigen::VectorXd z(3), t(2);
    z.setZero();
    t.setZero();
    CHECK_THROWS_AS(activation_eval(ActivationKind::dual_pathway(t), z), ContractError);
    CHECK_THROWS_AS(activation_grad(ActivationKind::dual_pathway(t), z), ContractError);
}

TEST_CASE("activation names round-trip") {
    for (auto a : {Activation::Linear, Activation::Tanh, Activation::Rectifier,
                   Activation::DualPathway})
        CHECK(activation_from_string(to_string(a)) == a);
    CHECK_THROWS_AS(activation_from_string("swish"), ContractError);
}
