#include "dprn/network.hpp"

#include <cmath>
#include <string>

namespace dprn {
namespace {

std::string dim_str(Eigen::Index r, Eigen::Index c) {
    return std::to_string(r) + "x" + std::to_string(c);
}

}  // namespace

Network::Network(std::vector<LayerSpec> specs) : layers_(std::move(specs)) {
    if (layers_.empty()) throw ContractError("network needs at least one layer");
    weights_.resize(layers_.size());
    biases_.resize(layers_.size());
    thresholds_.resize(layers_.size());
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const auto& s = layers_[l];
        if (s.in_dim <= 0 || s.out_dim <= 0)
            throw ContractError("layer " + std::to_string(l) + " has non-positive dims");
        if (l > 0 && layers_[l - 1].out_dim != s.in_dim)
            throw ContractError("dimension chain broken between layers " +
                                std::to_string(l - 1) + " and " + std::to_string(l));
        if (s.tied_to) {
            const std::size_t p = *s.tied_to;
            if (p >= l) throw ContractError("tied_to must reference an earlier layer");
            if (layers_[p].tied_to) throw ContractError("tied partner is itself tied");
            if (layers_[p].in_dim != s.out_dim || layers_[p].out_dim != s.in_dim)
                throw ContractError("tied layer dims must be the partner's swapped");
        } else {
            weights_[l] = Eigen::MatrixXd::Zero(s.out_dim, s.in_dim);
        }
        biases_[l] = Eigen::VectorXd::Zero(s.out_dim);
        if (s.activation == Activation::DualPathway)
            thresholds_[l] = Eigen::VectorXd::Zero(s.out_dim);
    }
}

Network Network::make_mlp(Eigen::Index in_dim, const std::vector<Eigen::Index>& hidden,
                          Eigen::Index out_dim, Activation hidden_activation, bool tied) {
    std::vector<LayerSpec> specs;
    Eigen::Index prev = in_dim;
    for (Eigen::Index h : hidden) {
        specs.push_back({prev, h, hidden_activation, std::nullopt});
        prev = h;
    }
    LayerSpec out{prev, out_dim, Activation::Linear, std::nullopt};
    if (tied) {
        if (hidden.size() != 1 || in_dim != out_dim)
            throw ContractError("tied networks require a single hidden layer and in == out");
        out.tied_to = 0;
    }
    specs.push_back(out);
    return Network(std::move(specs));
}

Eigen::MatrixXd& Network::weight(std::size_t l) {
    if (tied(l)) throw ContractError("tied layer " + std::to_string(l) + " owns no weight");
    return weights_[l];
}

const Eigen::MatrixXd& Network::weight(std::size_t l) const {
    if (tied(l)) throw ContractError("tied layer " + std::to_string(l) + " owns no weight");
    return weights_[l];
}

Eigen::MatrixXd Network::effective_weight(std::size_t l) const {
    if (tied(l)) return weights_[*layers_[l].tied_to].transpose();
    return weights_[l];
}

Eigen::VectorXd& Network::thresholds(std::size_t l) {
    if (layers_[l].activation != Activation::DualPathway)
        throw ContractError("layer " + std::to_string(l) + " has no thresholds");
    return thresholds_[l];
}

const Eigen::VectorXd& Network::thresholds(std::size_t l) const {
    if (layers_[l].activation != Activation::DualPathway)
        throw ContractError("layer " + std::to_string(l) + " has no thresholds");
    return thresholds_[l];
}

ActivationKind Network::activation_kind(std::size_t l) const {
    ActivationKind k;
    k.kind = layers_[l].activation;
    if (k.kind == Activation::DualPathway) k.thresholds = thresholds_[l];
    return k;
}

Eigen::Index Network::parameter_count() const {
    Eigen::Index n = 0;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        if (!tied(l)) n += layers_[l].out_dim * layers_[l].in_dim;
        n += layers_[l].out_dim;
        if (layers_[l].activation == Activation::DualPathway) n += layers_[l].out_dim;
    }
    return n;
}

Eigen::VectorXd Network::flatten() const {
    Eigen::VectorXd x(parameter_count());
    Eigen::Index off = 0;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        if (!tied(l)) {
            const auto& W = weights_[l];
            for (Eigen::Index r = 0; r < W.rows(); ++r) {
                x.segment(off, W.cols()) = W.row(r).transpose();
                off += W.cols();
            }
        }
        x.segment(off, biases_[l].size()) = biases_[l];
        off += biases_[l].size();
        if (layers_[l].activation == Activation::DualPathway) {
            x.segment(off, thresholds_[l].size()) = thresholds_[l];
            off += thresholds_[l].size();
        }
    }
    return x;
}

void Network::unflatten(const Eigen::VectorXd& x) {
    if (x.size() != parameter_count())
        throw ContractError("flattened vector has " + std::to_string(x.size()) +
                            " entries, expected " + std::to_string(parameter_count()));
    Eigen::Index off = 0;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        if (!tied(l)) {
            auto& W = weights_[l];
            for (Eigen::Index r = 0; r < W.rows(); ++r) {
                W.row(r) = x.segment(off, W.cols()).transpose();
                off += W.cols();
            }
        }
        biases_[l] = x.segment(off, layers_[l].out_dim);
        off += layers_[l].out_dim;
        if (layers_[l].activation == Activation::DualPathway) {
            thresholds_[l] = x.segment(off, layers_[l].out_dim);
            off += layers_[l].out_dim;
        }
    }
}

void Network::validate() const {
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        if (!tied(l)) {
            if (weights_[l].rows() != layers_[l].out_dim ||
                weights_[l].cols() != layers_[l].in_dim)
                throw ContractError("layer " + std::to_string(l) + " weight is " +
                                    dim_str(weights_[l].rows(), weights_[l].cols()) +
                                    ", spec says " +
                                    dim_str(layers_[l].out_dim, layers_[l].in_dim));
            if (!weights_[l].allFinite())
                throw ContractError("layer " + std::to_string(l) + " weight not finite");
        }
        if (biases_[l].size() != layers_[l].out_dim || !biases_[l].allFinite())
            throw ContractError("layer " + std::to_string(l) + " bias invalid");
        activation_kind(l).validate(layers_[l].out_dim);
    }
}

void initialize_parameters(Network& net, std::uint64_t seed) {
    Rng rng(seed);
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        const auto& spec = net.layers()[l];
        if (!spec.tied_to) {
            const double limit =
                std::sqrt(6.0 / static_cast<double>(spec.in_dim + spec.out_dim));
            auto& W = net.weight(l);
            for (Eigen::Index r = 0; r < W.rows(); ++r)
                for (Eigen::Index c = 0; c < W.cols(); ++c)
                    W(r, c) = (2.0 * rng.uniform() - 1.0) * limit;
        }
        net.bias(l).setZero();
        if (spec.activation == Activation::DualPathway) net.thresholds(l).setZero();
    }
}

Eigen::MatrixXd forward(const Network& net, const Eigen::MatrixXd& X, ForwardCache* cache) {
    if (X.cols() != net.input_dim())
        throw ContractError("input has " + std::to_string(X.cols()) +
                            " columns, network expects " + std::to_string(net.input_dim()));
    const std::size_t L = net.layer_count();
    if (cache) {
        cache->activations.clear();
        cache->pre_activations.clear();
        cache->activations.reserve(L + 1);
        cache->pre_activations.reserve(L);
        cache->activations.push_back(X);
    }
    Eigen::MatrixXd A = X;
    for (std::size_t l = 0; l < L; ++l) {
        Eigen::MatrixXd Z;
        if (net.tied(l))
            Z.noalias() = A * net.weight(*net.layers()[l].tied_to);
        else
            Z.noalias() = A * net.weight(l).transpose();
        Z.rowwise() += net.bias(l).transpose();
        if (!Z.allFinite())
            throw NumericError("non-finite pre-activation at layer " + std::to_string(l));
        const auto& spec = net.layers()[l];
        A = detail::activation_eval_batch(
            spec.activation,
            spec.activation == Activation::DualPathway ? net.thresholds(l)
                                                       : Eigen::VectorXd(),
            Z);
        if (cache) {
            cache->pre_activations.push_back(std::move(Z));
            cache->activations.push_back(A);
        }
    }
    return A;
}

Eigen::VectorXd backward(const Network& net, const ForwardCache& cache,
                         const Eigen::MatrixXd& dY) {
    const std::size_t L = net.layer_count();
    if (cache.activations.size() != L + 1 || cache.pre_activations.size() != L)
        throw ContractError("cache does not match network depth");
    for (std::size_t l = 0; l < L; ++l) {
        if (cache.pre_activations[l].cols() != net.layers()[l].out_dim ||
            cache.activations[l].cols() != net.layers()[l].in_dim)
            throw ContractError("cache dims do not match network at layer " +
                                std::to_string(l));
    }
    if (dY.rows() != cache.activations.back().rows() ||
        dY.cols() != cache.activations.back().cols())
        throw ContractError("dY dims do not match cached output");

    std::vector<Eigen::MatrixXd> gW(L);
    std::vector<Eigen::VectorXd> gb(L), gt(L);
    for (std::size_t l = 0; l < L; ++l) {
        if (!net.tied(l))
            gW[l] = Eigen::MatrixXd::Zero(net.layers()[l].out_dim, net.layers()[l].in_dim);
        if (net.layers()[l].activation == Activation::DualPathway)
            gt[l] = Eigen::VectorXd::Zero(net.layers()[l].out_dim);
    }

    Eigen::MatrixXd dA = dY;
    for (std::size_t li = L; li-- > 0;) {
        const auto& spec = net.layers()[li];
        const Eigen::MatrixXd& Z = cache.pre_activations[li];
        const Eigen::MatrixXd& A_in = cache.activations[li];
        Eigen::MatrixXd dZ;
        switch (spec.activation) {
            case Activation::Linear:
                dZ = std::move(dA);
                break;
            case Activation::Tanh: {
                const Eigen::MatrixXd& post = cache.activations[li + 1];
                dZ = (dA.array() * (1.0 - post.array().square())).matrix();
                break;
            }
            case Activation::Rectifier:
                dZ = (dA.array() * (Z.array() >= 0.0).cast<double>()).matrix();
                break;
            case Activation::DualPathway: {
                const auto& t = net.thresholds(li);
                Eigen::ArrayXXd pos =
                    ((Z.rowwise() + t.transpose()).array() >= 0.0).cast<double>();
                Eigen::ArrayXXd neg =
                    (((-Z).rowwise() + t.transpose()).array() >= 0.0).cast<double>();
                gt[li] = (dA.array() * (pos - neg)).matrix().colwise().sum().transpose();
                dZ = (dA.array() * (pos + neg)).matrix();
                break;
            }
        }
        gb[li] = dZ.colwise().sum().transpose();
        if (net.tied(li)) {
            const std::size_t p = *spec.tied_to;
            gW[p].noalias() += A_in.transpose() * dZ;  // transpose of dZ^T A_in
        } else {
            gW[li].noalias() += dZ.transpose() * A_in;
        }
        if (li > 0) {
            if (net.tied(li))
                dA.noalias() = dZ * net.weight(*spec.tied_to).transpose();
            else
                dA.noalias() = dZ * net.weight(li);
        }
    }

    Eigen::VectorXd g(net.parameter_count());
    Eigen::Index off = 0;
    for (std::size_t l = 0; l < L; ++l) {
        if (!net.tied(l)) {
            const auto& G = gW[l];
            for (Eigen::Index r = 0; r < G.rows(); ++r) {
                g.segment(off, G.cols()) = G.row(r).transpose();
                off += G.cols();
            }
        }
        g.segment(off, gb[l].size()) = gb[l];
        off += gb[l].size();
        if (net.layers()[l].activation == Activation::DualPathway) {
            g.segment(off, gt[l].size()) = gt[l];
            off += gt[l].size();
        }
    }
    return g;
}

std::pair<double, Eigen::MatrixXd> mse_loss(const Eigen::MatrixXd& Y_hat,
                                            const Eigen::MatrixXd& Y) {
    if (Y_hat.rows() != Y.rows() || Y_hat.cols() != Y.cols())
        throw ContractError("mse_loss shape mismatch: " + dim_str(Y_hat.rows(), Y_hat.cols()) +
                            " vs " + dim_str(Y.rows(), Y.cols()));
    const double n = static_cast<double>(Y.rows()) * static_cast<double>(Y.cols());
    Eigen::MatrixXd diff = Y_hat - Y;
    const double loss = 0.5 * diff.squaredNorm() / n;
    diff /= n;
    return {loss, std::move(diff)};
}

Network expand_dual(const Network& net) {
    const std::size_t L = net.layer_count();
    for (std::size_t l = 0; l + 1 < L; ++l) {
        if (net.layers()[l].activation != Activation::DualPathway)
            throw StructureError("hidden layer " + std::to_string(l) +
                                 " is not DualPathway; cannot expand");
        if (net.tied(l))
            throw StructureError("tied hidden layers are not expandable");
    }
    if (net.layers()[L - 1].activation == Activation::DualPathway)
        throw StructureError("output layer must not be DualPathway");
    if (net.tied(L - 1) && *net.layers()[L - 1].tied_to != L - 2)
        throw StructureError("tied output must reference the last hidden layer");

    std::vector<LayerSpec> specs;
    specs.reserve(L);
    for (std::size_t l = 0; l < L; ++l) {
        LayerSpec s = net.layers()[l];
        if (l > 0) s.in_dim *= 2;
        if (l + 1 < L) {
            s.out_dim *= 2;
            s.activation = Activation::Rectifier;
        }
        specs.push_back(s);
    }
    Network out(std::move(specs));
    for (std::size_t l = 0; l < L; ++l) {
        if (net.tied(l)) continue;  // definitional transpose carries over
        const auto& W = net.weight(l);
        Eigen::MatrixXd widened;
        if (l > 0) {
            widened.resize(W.rows(), 2 * W.cols());
            widened << W, -W;
        } else {
            widened = W;
        }
        if (l + 1 < L) {
            auto& Wn = out.weight(l);
            Wn.topRows(W.rows()) = widened;
            Wn.bottomRows(W.rows()) = -widened;
            const auto& c = net.bias(l);
            const auto& t = net.thresholds(l);
            out.bias(l).head(W.rows()) = c + t;
            out.bias(l).tail(W.rows()) = t - c;
        } else {
            out.weight(l) = widened;
            out.bias(l) = net.bias(l);
        }
    }
    if (net.tied(L - 1)) out.bias(L - 1) = net.bias(L - 1);
    return out;
}

Network compact_dual(const Network& net) {
    const std::size_t L = net.layer_count();
    for (std::size_t l = 0; l + 1 < L; ++l) {
        if (net.layers()[l].activation != Activation::Rectifier)
            throw StructureError("hidden layer " + std::to_string(l) +
                                 " is not Rectifier; nothing to compact");
        if (net.tied(l)) throw StructureError("tied hidden layers are not compactable");
        if (net.layers()[l].out_dim % 2 != 0)
            throw StructureError("hidden layer " + std::to_string(l) + " width is odd");
    }
    if (net.layers()[L - 1].activation == Activation::DualPathway)
        throw StructureError("output layer must not be DualPathway");
    if (net.tied(L - 1) && *net.layers()[L - 1].tied_to != L - 2)
        throw StructureError("tied output must reference the last hidden layer");

    std::vector<LayerSpec> specs;
    specs.reserve(L);
    for (std::size_t l = 0; l < L; ++l) {
        LayerSpec s = net.layers()[l];
        if (l > 0) s.in_dim /= 2;
        if (l + 1 < L) {
            s.out_dim /= 2;
            s.activation = Activation::DualPathway;
        }
        specs.push_back(s);
    }
    Network out(std::move(specs));
    for (std::size_t l = 0; l < L; ++l) {
        if (net.tied(l)) continue;
        const auto& W = net.weight(l);
        Eigen::MatrixXd top;
        if (l + 1 < L) {
            const Eigen::Index K = W.rows() / 2;
            if (W.bottomRows(K) != (-W.topRows(K)).eval())
                throw StructureError("hidden layer " + std::to_string(l) +
                                     " rows are not exact negations");
            top = W.topRows(K);
            const auto& b = net.bias(l);
            out.bias(l) = (b.head(K) - b.tail(K)) / 2.0;
            out.thresholds(l) = (b.head(K) + b.tail(K)) / 2.0;
        } else {
            top = W;
            out.bias(l) = net.bias(l);
        }
        if (l > 0) {
            const Eigen::Index half = top.cols() / 2;
            if (top.rightCols(half) != (-top.leftCols(half)).eval())
                throw StructureError("layer " + std::to_string(l) +
                                     " columns are not exact negations");
            out.weight(l) = top.leftCols(half);
        } else {
            out.weight(l) = top;
        }
    }
    if (net.tied(L - 1)) out.bias(L - 1) = net.bias(L - 1);
    return out;
}

}  // namespace dprn
