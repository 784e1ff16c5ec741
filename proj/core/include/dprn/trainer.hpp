#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "dprn/lbfgs.hpp"
#include "dprn/network.hpp"

namespace dprn {

struct TrainConfig {
    Eigen::Index minibatch_size = 10000;
    int n_minibatches = 1;             // total minibatches processed
    int iterations_per_minibatch = 3;  // K; overrides LBFGSConfig::max_iterations
    std::uint64_t seed = 0;

    void validate(Eigen::Index dataset_size) const;
};

/// Training aborted on a non-finite evaluation; carries the last parameters
/// that evaluated cleanly.
struct TrainingFailure : NumericError {
    TrainingFailure(const std::string& msg, int batch, Network params)
        : NumericError(msg), minibatch_index(batch), last_good_params(std::move(params)) {}
    int minibatch_index;
    Network last_good_params;
};

struct TrainResult {
    Network params;
    std::vector<double> loss_curve;  // minibatch loss after its K iterations
};

/// Minibatch L-BFGS: epoch-style seeded shuffling; each minibatch gets K
/// L-BFGS iterations on its own loss, starting from the current parameters
/// with freshly reset curvature memory (the objective changes with the batch,
/// so old pairs do not apply).
///
/// Inputs/targets are stored single-precision and promoted to double per
/// minibatch. Outputs are bitwise reproducible for identical (seed, configs,
/// data, initial params, n_threads); changing n_threads changes the gradient
/// accumulation order.
TrainResult minibatch_train(Network params, const Eigen::MatrixXf& inputs,
                            const Eigen::MatrixXf& targets, const TrainConfig& cfg,
                            const LBFGSConfig& lbfgs_cfg, int n_threads = 1);

/// Minibatch loss objective over double-promoted rows, partitioned across
/// n_threads fixed row ranges with gradients summed in range order.
class BatchObjective {
public:
    BatchObjective(const Network& shape, Eigen::MatrixXd X, Eigen::MatrixXd Y, int n_threads);

    double operator()(const Eigen::VectorXd& flat, Eigen::VectorXd& grad);

private:
    Network net_;
    Eigen::MatrixXd X_, Y_;
    int n_threads_;
};

}  // namespace dprn
