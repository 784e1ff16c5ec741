#include "dprn/activation.hpp"

namespace dprn {
namespace {

// H(0) := 1 throughout; any value in [0,1] is a valid subgradient of
// max(0, .) at 0 and fixing one keeps results deterministic.
inline double step(double x) { return x >= 0.0 ? 1.0 : 0.0; }

}  // namespace

std::string to_string(Activation a) {
    switch (a) {
        case Activation::Linear: return "linear";
        case Activation::Tanh: return "tanh";
        case Activation::Rectifier: return "rectifier";
        case Activation::DualPathway: return "dual_pathway";
    }
    return "unknown";
}

Activation activation_from_string(std::string_view name) {
    if (name == "linear") return Activation::Linear;
    if (name == "tanh") return Activation::Tanh;
    if (name == "rectifier") return Activation::Rectifier;
    if (name == "dual_pathway") return Activation::DualPathway;
    throw ContractError("unknown activation name: " + std::string(name));
}

void ActivationKind::validate(Eigen::Index width) const {
    if (kind == Activation::DualPathway) {
        if (thresholds.size() != width)
            throw ContractError("DualPathway thresholds length " +
                                std::to_string(thresholds.size()) +
                                " does not match unit count " + std::to_string(width));
        if (!thresholds.allFinite())
            throw ContractError("DualPathway thresholds contain non-finite entries");
    } else if (thresholds.size() != 0) {
        throw ContractError("thresholds present on non-DualPathway activation");
    }
}

Eigen::VectorXd activation_eval(const ActivationKind& kind, const Eigen::VectorXd& z) {
    kind.validate(z.size());
    switch (kind.kind) {
        case Activation::Linear:
            return z;
        case Activation::Tanh:
            return z.array().tanh();
        case Activation::Rectifier:
            return z.cwiseMax(0.0);
        case Activation::DualPathway: {
            const auto& t = kind.thresholds;
            return (z + t).cwiseMax(0.0) - (t - z).cwiseMax(0.0);
        }
    }
    throw ContractError("unreachable activation kind");
}

ActivationGrad activation_grad(const ActivationKind& kind, const Eigen::VectorXd& z) {
    kind.validate(z.size());
    ActivationGrad g;
    switch (kind.kind) {
        case Activation::Linear:
            g.dz = Eigen::VectorXd::Ones(z.size());
            break;
        case Activation::Tanh: {
            const Eigen::ArrayXd th = z.array().tanh();
            g.dz = (1.0 - th.square()).matrix();
            break;
        }
        case Activation::Rectifier:
            g.dz = z.unaryExpr([](double v) { return step(v); });
            break;
        case Activation::DualPathway: {
            const auto& t = kind.thresholds;
            Eigen::VectorXd pos = (z + t).unaryExpr([](double v) { return step(v); });
            Eigen::VectorXd neg = (t - z).unaryExpr([](double v) { return step(v); });
            g.dz = pos + neg;
            g.dt = pos - neg;
            break;
        }
    }
    return g;
}

namespace detail {

Eigen::MatrixXd activation_eval_batch(Activation kind, const Eigen::VectorXd& thresholds,
                                      const Eigen::MatrixXd& Z) {
    switch (kind) {
        case Activation::Linear:
            return Z;
        case Activation::Tanh:
            return Z.array().tanh();
        case Activation::Rectifier:
            return Z.cwiseMax(0.0);
        case Activation::DualPathway: {
            Eigen::MatrixXd plus = Z.rowwise() + thresholds.transpose();   // z + t
            Eigen::MatrixXd minus = (-Z).rowwise() + thresholds.transpose();  // -z + t
            return plus.cwiseMax(0.0) - minus.cwiseMax(0.0);
        }
    }
    throw ContractError("unreachable activation kind");
}

}  // namespace detail

}  // namespace dprn
