#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <string_view>

#include "dprn/errors.hpp"

namespace dprn {

enum class Activation { Linear, Tanh, Rectifier, DualPathway };

std::string to_string(Activation a);
Activation activation_from_string(std::string_view name);

/// An activation together with its per-unit parameters. Only DualPathway
/// carries state: one threshold per unit of the layer it acts on.
///
/// DualPathway evaluates g(z) = max(0, z + t) - max(0, -z + t), the
/// antisymmetric rectifier pair: identity at t = 0, slope-2 around the origin
/// for t > 0, a dead zone of half-width |t| for t < 0.
struct ActivationKind {
    Activation kind = Activation::Linear;
    Eigen::VectorXd thresholds;  // non-empty iff kind == DualPathway

    static ActivationKind linear() { return {Activation::Linear, {}}; }
    static ActivationKind tanh() { return {Activation::Tanh, {}}; }
    static ActivationKind rectifier() { return {Activation::Rectifier, {}}; }
    static ActivationKind dual_pathway(Eigen::VectorXd t) {
        return {Activation::DualPathway, std::move(t)};
    }

    bool has_thresholds() const { return kind == Activation::DualPathway; }

    /// Checks the thresholds match the layer width and are finite.
    void validate(Eigen::Index width) const;
};

/// Elementwise activation of a pre-activation vector.
Eigen::VectorXd activation_eval(const ActivationKind& kind, const Eigen::VectorXd& z);

struct ActivationGrad {
    Eigen::VectorXd dz;                  // dg/dz elementwise
    std::optional<Eigen::VectorXd> dt;   // dg/dt, DualPathway only
};

/// Derivatives at z. Kinks use the convention H(0) = 1, so for DualPathway
/// dg/dz = H(z+t) + H(t-z) and dg/dt = H(z+t) - H(t-z).
ActivationGrad activation_grad(const ActivationKind& kind, const Eigen::VectorXd& z);

namespace detail {

/// Batch forms used by the network hot path: Z is n x width (sample per row),
/// thresholds broadcast along columns.
Eigen::MatrixXd activation_eval_batch(Activation kind, const Eigen::VectorXd& thresholds,
                                      const Eigen::MatrixXd& Z);

}  // namespace detail

}  // namespace dprn
