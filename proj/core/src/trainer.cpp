#include "dprn/trainer.hpp"

#include <numeric>
#include <thread>

#include "dprn/rng.hpp"

namespace dprn {

void TrainConfig::validate(Eigen::Index dataset_size) const {
    if (minibatch_size < 1) throw ContractError("minibatch_size must be >= 1");
    if (minibatch_size > dataset_size)
        throw ContractError("minibatch_size " + std::to_string(minibatch_size) +
                            " exceeds dataset size " + std::to_string(dataset_size));
    if (n_minibatches < 0) throw ContractError("n_minibatches must be >= 0");
    if (iterations_per_minibatch < 0) throw ContractError("K must be >= 0");
}

BatchObjective::BatchObjective(const Network& shape, Eigen::MatrixXd X, Eigen::MatrixXd Y,
                               int n_threads)
    : net_(shape), X_(std::move(X)), Y_(std::move(Y)), n_threads_(std::max(1, n_threads)) {}

double BatchObjective::operator()(const Eigen::VectorXd& flat, Eigen::VectorXd& grad) {
    net_.unflatten(flat);
    const Eigen::Index n = X_.rows();
    const double entries = static_cast<double>(n) * static_cast<double>(Y_.cols());
    const int workers = static_cast<int>(std::min<Eigen::Index>(n_threads_, n));

    if (workers == 1) {
        ForwardCache cache;
        Eigen::MatrixXd Y_hat = forward(net_, X_, &cache);
        auto [loss, dY] = mse_loss(Y_hat, Y_);
        grad = backward(net_, cache, dY);
        return loss;
    }

    std::vector<double> losses(workers, 0.0);
    std::vector<Eigen::VectorXd> grads(workers);
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const Eigen::Index chunk = (n + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                const Eigen::Index r0 = w * chunk;
                const Eigen::Index len = std::min(chunk, n - r0);
                ForwardCache cache;
                Eigen::MatrixXd Y_hat = forward(net_, X_.middleRows(r0, len), &cache);
                Eigen::MatrixXd diff = Y_hat - Y_.middleRows(r0, len);
                losses[w] = 0.5 * diff.squaredNorm() / entries;
                diff /= entries;
                grads[w] = backward(net_, cache, diff);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);

    double loss = 0.0;
    grad = Eigen::VectorXd::Zero(flat.size());
    for (int w = 0; w < workers; ++w) {  // fixed order keeps sums reproducible
        loss += losses[w];
        grad += grads[w];
    }
    return loss;
}

TrainResult minibatch_train(Network params, const Eigen::MatrixXf& inputs,
                            const Eigen::MatrixXf& targets, const TrainConfig& cfg,
                            const LBFGSConfig& lbfgs_cfg, int n_threads) {
    const Eigen::Index n = inputs.rows();
    if (targets.rows() != n) throw ContractError("inputs/targets row counts differ");
    if (inputs.cols() != params.input_dim() || targets.cols() != params.output_dim())
        throw ContractError("dataset dimensions do not match the network");
    cfg.validate(n);
    lbfgs_cfg.validate();

    LBFGSConfig inner = lbfgs_cfg;
    inner.max_iterations = cfg.iterations_per_minibatch;

    Rng rng(cfg.seed);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    const Eigen::Index batches_per_epoch = n / cfg.minibatch_size;

    Eigen::VectorXd flat = params.flatten();
    TrainResult result;
    result.loss_curve.reserve(static_cast<std::size_t>(cfg.n_minibatches));

    Eigen::MatrixXd Xb(cfg.minibatch_size, inputs.cols());
    Eigen::MatrixXd Yb(cfg.minibatch_size, targets.cols());
    for (int b = 0; b < cfg.n_minibatches; ++b) {
        const Eigen::Index pos = b % batches_per_epoch;
        if (pos == 0) rng.shuffle(order);
        for (Eigen::Index i = 0; i < cfg.minibatch_size; ++i) {
            const Eigen::Index row = order[static_cast<std::size_t>(pos * cfg.minibatch_size + i)];
            Xb.row(i) = inputs.row(row).cast<double>();
            Yb.row(i) = targets.row(row).cast<double>();
        }
        BatchObjective objective(params, Xb, Yb, n_threads);
        try {
            if (cfg.iterations_per_minibatch == 0) {
                Eigen::VectorXd g(flat.size());
                result.loss_curve.push_back(objective(flat, g));
                continue;
            }
            MinimizeResult r = lbfgs_minimize(std::ref(objective), flat, inner);
            flat = std::move(r.x);
            result.loss_curve.push_back(r.f);
        } catch (const NumericError& e) {
            Network last_good = params;
            last_good.unflatten(flat);
            throw TrainingFailure(std::string(e.what()) + " (minibatch " + std::to_string(b) + ")",
                                  b, std::move(last_good));
        }
    }

    params.unflatten(flat);
    result.params = std::move(params);
    return result;
}

}  // namespace dprn
