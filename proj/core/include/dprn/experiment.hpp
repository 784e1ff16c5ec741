#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "dprn/dataset.hpp"
#include "dprn/image.hpp"
#include "dprn/network.hpp"
#include "dprn/trainer.hpp"

namespace dprn {

/// One experiment, serializable to/from JSON (the CLI's --config format).
/// hidden_widths is the layer stack for the deep denoiser and the width sweep
/// for the autoencoder experiment (each width is one single-hidden-layer run).
struct ExperimentConfig {
    std::filesystem::path corpus_dir;
    int patch_in = 17;
    int patch_out = 9;
    double sigma_255 = 25.0;
    std::int64_t n_train = 200000;
    std::int64_t n_test = 20000;
    std::vector<Eigen::Index> hidden_widths = {100};
    Activation activation = Activation::DualPathway;
    bool tied = false;
    std::vector<std::uint64_t> seeds = {1};
    TrainConfig train;
    LBFGSConfig lbfgs;

    void validate() const;
    static ExperimentConfig from_json_text(const std::string& text);
    static ExperimentConfig from_json_file(const std::filesystem::path& path);
    std::string to_json_text() const;
};

/// All *.pgm files under dir, sorted by filename.
std::vector<GrayImage> load_corpus(const std::filesystem::path& dir);

/// Draws n (noisy input, clean target) patch pairs: image chosen uniformly,
/// position uniformly among valid top-left corners, sampling with
/// replacement. The clean target is the centered patch_out block; both sides
/// have the noisy patch's mean subtracted.
Dataset sample_patch_dataset(const std::vector<GrayImage>& images, int patch_in, int patch_out,
                             double sigma_255, std::int64_t n, std::uint64_t seed);

/// Streams cfg.n_train samples from cfg.corpus_dir into a DPDS file.
void build_patch_dataset(const ExperimentConfig& cfg, const std::filesystem::path& out_file,
                         std::uint64_t seed);

/// Rebuilds the network with every hidden rectifier swapped for DualPathway
/// (thresholds zero): identical initial weights, appended thresholds.
Network with_dual_hidden(const Network& net);

struct VariantAnalysis {
    double test_rmse = 0.0;
    double reversed_fraction = 0.0;      // at the report threshold
    double reversed_fraction_170 = 0.0;  // pairs beyond 170 degrees
    double max_pair_angle = 0.0;
};

struct AutoencoderRun {
    std::uint64_t seed = 0;
    int width = 0;
    VariantAnalysis plain;
    VariantAnalysis dual;
};

struct AutoencoderReport {
    double threshold_degrees = 160.0;
    std::vector<AutoencoderRun> runs;
};

/// The reversed-atom / overcompleteness experiment: for every (seed, width)
/// trains tied plain-rectifier and dual-pathway autoencoders from the same
/// initial weights on the same minibatch sequence, then reports test RMSE and
/// dictionary statistics. Test patches come from held-out corpus images (the
/// last fifth of the sorted corpus). When out_dir is non-empty, atom montages,
/// angle histograms and a report.csv are written there.
AutoencoderReport run_autoencoder_experiment(const ExperimentConfig& cfg,
                                             const std::filesystem::path& out_dir,
                                             double threshold_degrees = 160.0,
                                             int n_threads = 1);

/// Trains the deep patch denoiser described by cfg on the dataset; `seed`
/// drives both initialization and the minibatch schedule.
TrainResult train_denoiser(const ExperimentConfig& cfg, const Dataset& data, std::uint64_t seed,
                           int n_threads = 1);

/// File-level wrapper: writes the trained model and a per-minibatch loss CSV.
/// On numeric failure writes <model_out>.checkpoint.dprn with the last good
/// parameters and rethrows.
TrainResult run_denoiser_training(const ExperimentConfig& cfg, const Dataset& data,
                                  std::uint64_t seed, const std::filesystem::path& model_out,
                                  const std::filesystem::path& log_out, int n_threads = 1);

struct PsnrTable {
    std::vector<std::string> images;  // row names, file order
    std::vector<double> sigmas;       // column labels
    Eigen::MatrixXd values;           // rows x sigmas, seed-averaged PSNR in dB

    Eigen::VectorXd averages() const;  // per-sigma mean over images
};

/// Table I protocol: for each (image, sigma, seed) synthesize noise, denoise
/// (or keep the noisy image when model is null: the noisy baseline), and
/// record PSNR against the clean image; cells average over seeds. Noise seeds
/// derive from each base seed by per-(image, sigma) stream splitting.
PsnrTable evaluate_suite(const Network* model, const std::filesystem::path& image_dir,
                         const std::vector<double>& sigmas,
                         const std::vector<std::uint64_t>& seeds, int stride = 3,
                         int n_threads = 1);

/// Rows are images plus a final "Average" row; columns are the sigma levels.
void write_psnr_csv(std::ostream& out, const PsnrTable& table);

void write_loss_csv(std::ostream& out, const std::vector<double>& loss_curve);

}  // namespace dprn
