#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "dprn/activation.hpp"
#include "dprn/errors.hpp"
#include "dprn/rng.hpp"

namespace dprn {

/// Shape of one dense layer. A layer with `tied_to` set owns no weight matrix
/// of its own: its weight is, by definition, the transpose of the referenced
/// earlier layer's weight (a single underlying parameter block), so its
/// dimensions are swapped relative to the partner's.
struct LayerSpec {
    Eigen::Index in_dim = 0;
    Eigen::Index out_dim = 0;
    Activation activation = Activation::Linear;
    std::optional<std::size_t> tied_to;

    bool operator==(const LayerSpec&) const = default;
};

/// Dense feed-forward network: weights, biases and per-unit dual-pathway
/// thresholds.
///
/// The flattened parameter vector has a fixed ordering: layers in order; for
/// each layer, its weight row by row (absent for tied layers, whose block is
/// emitted at the partner's position), then its bias, then its thresholds if
/// the layer is DualPathway. flatten/unflatten round-trip bitwise.
class Network {
public:
    Network() = default;
    explicit Network(std::vector<LayerSpec> specs);

    /// in -> hidden... -> out stack with Linear output. `tied` constrains the
    /// output weight to the transpose of the (single) hidden layer's weight
    /// and requires in == out.
    static Network make_mlp(Eigen::Index in_dim, const std::vector<Eigen::Index>& hidden,
                            Eigen::Index out_dim, Activation hidden_activation,
                            bool tied = false);

    const std::vector<LayerSpec>& layers() const { return layers_; }
    std::size_t layer_count() const { return layers_.size(); }
    Eigen::Index input_dim() const { return layers_.front().in_dim; }
    Eigen::Index output_dim() const { return layers_.back().out_dim; }

    bool tied(std::size_t l) const { return layers_[l].tied_to.has_value(); }

    /// Owned weight block; throws for tied layers.
    Eigen::MatrixXd& weight(std::size_t l);
    const Eigen::MatrixXd& weight(std::size_t l) const;

    /// Weight as seen by the forward pass; materializes the transpose for
    /// tied layers.
    Eigen::MatrixXd effective_weight(std::size_t l) const;

    Eigen::VectorXd& bias(std::size_t l) { return biases_[l]; }
    const Eigen::VectorXd& bias(std::size_t l) const { return biases_[l]; }

    /// Per-unit thresholds; only meaningful for DualPathway layers.
    Eigen::VectorXd& thresholds(std::size_t l);
    const Eigen::VectorXd& thresholds(std::size_t l) const;

    /// Activation of layer l together with its thresholds (copied).
    ActivationKind activation_kind(std::size_t l) const;

    Eigen::Index parameter_count() const;
    Eigen::VectorXd flatten() const;
    void unflatten(const Eigen::VectorXd& x);

    /// Checks dimension chaining, tie validity and parameter finiteness.
    void validate() const;

private:
    std::vector<LayerSpec> layers_;
    std::vector<Eigen::MatrixXd> weights_;     // empty matrix at tied layers
    std::vector<Eigen::VectorXd> biases_;
    std::vector<Eigen::VectorXd> thresholds_;  // empty unless DualPathway
};

/// Glorot-uniform weights in +-sqrt(6/(fan_in+fan_out)), zero biases, zero
/// thresholds (the neutral point of the dual-pathway activation).
void initialize_parameters(Network& net, std::uint64_t seed);

/// Per-layer intermediate values kept for the backward pass:
/// activations[0] is the input batch, activations[l+1] the output of layer l,
/// pre_activations[l] the affine output of layer l.
struct ForwardCache {
    std::vector<Eigen::MatrixXd> activations;
    std::vector<Eigen::MatrixXd> pre_activations;
};

/// Batched forward pass, one sample per row of X. Throws NumericError if any
/// intermediate turns non-finite.
Eigen::MatrixXd forward(const Network& net, const Eigen::MatrixXd& X,
                        ForwardCache* cache = nullptr);

/// Gradient of the scalar loss whose dY = dLoss/dY_hat is given, with respect
/// to every free parameter, in flattened order. Tied layers accumulate the
/// gradients of both roles into the single shared block.
Eigen::VectorXd backward(const Network& net, const ForwardCache& cache,
                         const Eigen::MatrixXd& dY);

/// loss = sum of squared residuals / (2 * number of entries); second member
/// is dLoss/dY_hat.
std::pair<double, Eigen::MatrixXd> mse_loss(const Eigen::MatrixXd& Y_hat,
                                            const Eigen::MatrixXd& Y);

/// Rewrites a compact dual-pathway network as a plain-rectifier network of
/// doubled hidden widths: a hidden layer (W, c, t) becomes weights [W; -W]
/// with biases [c + t; t - c], and the consuming layer's weight becomes
/// [V, -V]. Forward-equivalent to the input network.
Network expand_dual(const Network& net);

/// Inverse of expand_dual: recognizes the paired structure (hidden weights
/// exactly [W; -W], consuming weights exactly [V, -V]) and folds it back to
/// the compact form with bias (b1 - b1')/2 and thresholds (b1 + b1')/2.
Network compact_dual(const Network& net);

}  // namespace dprn
