#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "dprn/experiment.hpp"
#include "dprn/metrics.hpp"
#include "dprn/model_io.hpp"
#include "support.hpp"

using namespace dprn;
using namespace dprn::testing;

namespace {

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const char* name)
        : path(std::filesystem::temp_directory_path() / name) {
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST_CASE("with_dual_hidden keeps weights and appends zero thresholds") {
    Network plain = Network::make_mlp(9, {6}, 9, Activation::Rectifier, true);
    initialize_parameters(plain, 4);
    const Network dual = with_dual_hidden(plain);
    CHECK(dual.layers()[0].activation == Activation::DualPathway);
    CHECK(dual.weight(0) == plain.weight(0));
    CHECK(dual.bias(0) == plain.bias(0));
    CHECK(dual.thresholds(0).cwiseAbs().maxCoeff() == 0.0);
    CHECK(dual.layers()[1].tied_to == std::size_t{0});
    CHECK_THROWS_AS(with_dual_hidden(Network::make_mlp(4, {3}, 2, Activation::Tanh)),
                    ContractError);
}

TEST_CASE("autoencoder experiment produces reports and analysis files") {
    TempDir dir("dprn_ae_smoke");
    const auto corpus = dir.path / "corpus";
    write_synthetic_corpus(corpus, 5, 48, 48, 500);

    ExperimentConfig cfg;
    cfg.corpus_dir = corpus;
    cfg.patch_in = 6;
    cfg.patch_out = 6;
    cfg.sigma_255 = 25.0;
    cfg.n_train = 3000;
    cfg.n_test = 500;
    cfg.hidden_widths = {8};
    cfg.tied = true;
    cfg.seeds = {1, 2};
    cfg.train.minibatch_size = 1000;
    cfg.train.n_minibatches = 6;
    cfg.train.iterations_per_minibatch = 3;

    const auto out = dir.path / "report";
    const AutoencoderReport report = run_autoencoder_experiment(cfg, out, 160.0);
    REQUIRE(report.runs.size() == 2);
    for (const auto& run : report.runs) {
        CHECK(run.width == 8);
        CHECK(std::isfinite(run.plain.test_rmse));
        CHECK(std::isfinite(run.dual.test_rmse));
        CHECK(run.plain.test_rmse > 0.0);
        CHECK(run.plain.max_pair_angle <= 180.0);
    }
    CHECK(std::filesystem::exists(out / "report.csv"));
    CHECK(std::filesystem::exists(out / "seed1_width8_plain_atoms.pgm"));
    CHECK(std::filesystem::exists(out / "seed1_width8_dual_hist.csv"));
    CHECK(std::filesystem::exists(out / "seed2_width8_dual_atoms.pgm"));

    // patch_in != patch_out is rejected for the autoencoder protocol
    cfg.patch_out = 4;
    CHECK_THROWS_AS(run_autoencoder_experiment(cfg, "", 160.0), ContractError);
}

TEST_CASE("denoiser training run writes a loadable model and loss log") {
    TempDir dir("dprn_train_smoke");
    const auto corpus = dir.path / "corpus";
    write_synthetic_corpus(corpus, 3, 40, 40, 700);

    ExperimentConfig cfg;
    cfg.corpus_dir = corpus;
    cfg.patch_in = 9;
    cfg.patch_out = 5;
    cfg.sigma_255 = 25.0;
    cfg.n_train = 4000;
    cfg.hidden_widths = {16};
    cfg.activation = Activation::DualPathway;
    cfg.train.minibatch_size = 1000;
    cfg.train.n_minibatches = 8;

    const Dataset data = sample_patch_dataset(load_corpus(corpus), 9, 5, 25.0, 4000, 11);
    const auto model_path = dir.path / "model.dprn";
    const auto log_path = dir.path / "loss.csv";
    const TrainResult r = run_denoiser_training(cfg, data, 11, model_path, log_path);
    CHECK(r.loss_curve.back() < r.loss_curve.front());

    const Network model = load_model(model_path);
    CHECK(model.input_dim() == 81);
    CHECK(model.output_dim() == 25);

    std::ifstream log(log_path);
    std::string header;
    std::getline(log, header);
    CHECK(header == "minibatch,loss");
}

TEST_CASE("evaluate_suite reproduces the noisy baseline and averages rows") {
    TempDir dir("dprn_eval_smoke");
    const auto images = dir.path / "images";
    write_synthetic_corpus(images, 3, 96, 96, 900);

    const PsnrTable table =
        evaluate_suite(nullptr, images, {25.0, 50.0}, {5, 6}, 3, 2);
    REQUIRE(table.images.size() == 3);
    REQUIRE(table.values.cols() == 2);
    CHECK(table.averages()(0) == doctest::Approx(20.17).epsilon(0.02));
    CHECK(table.averages()(0) ==
          doctest::Approx(table.values.col(0).mean()).epsilon(1e-12));
    CHECK(table.averages()(1) < table.averages()(0));  // more noise, lower psnr

    std::ostringstream csv;
    write_psnr_csv(csv, table);
    const std::string text = csv.str();
    CHECK(text.rfind("image,25,50\n", 0) == 0);
    CHECK(text.find("\nAverage,") != std::string::npos);
    CHECK(text.find("img00") != std::string::npos);
}

TEST_CASE("evaluate_suite with the center-projection model matches the baseline") {
    TempDir dir("dprn_eval_id");
    const auto images = dir.path / "images";
    write_synthetic_corpus(images, 2, 64, 64, 1100);
    const Network id = center_projection_network(17, 9);
    const PsnrTable with_model = evaluate_suite(&id, images, {25.0}, {3}, 3, 1);
    const PsnrTable baseline = evaluate_suite(nullptr, images, {25.0}, {3}, 3, 1);
    // identity denoising returns the noisy image (border included, via fallback)
    for (Eigen::Index i = 0; i < with_model.values.rows(); ++i)
        CHECK(with_model.values(i, 0) ==
              doctest::Approx(baseline.values(i, 0)).epsilon(1e-6));

    // determinism across reruns and thread counts
    const PsnrTable again = evaluate_suite(&id, images, {25.0}, {3}, 3, 2);
    CHECK(again.values == with_model.values);
}
