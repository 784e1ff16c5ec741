#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>

#include "dprn/dataset.hpp"
#include "dprn/dictionary.hpp"
#include "dprn/experiment.hpp"
#include "dprn/metrics.hpp"
#include "dprn/model_io.hpp"
#include "dprn/noise.hpp"
#include "dprn/patches.hpp"
#include "dprn/pgm.hpp"

namespace fs = std::filesystem;
using namespace dprn;

namespace {

// exit codes: 0 success, 1 usage, 2 data/parse, 3 numeric failure
constexpr int kUsageError = 1;
constexpr int kDataError = 2;
constexpr int kNumericError = 3;

struct GlobalArgs {
    std::optional<std::uint64_t> seed;
    std::string config_path;
    int threads = 1;
};

ExperimentConfig config_or_default(const GlobalArgs& g) {
    if (!g.config_path.empty()) return ExperimentConfig::from_json_file(g.config_path);
    return ExperimentConfig{};
}

int patch_side_of(Eigen::Index dim) {
    const int side = static_cast<int>(std::llround(std::sqrt(static_cast<double>(dim))));
    if (static_cast<Eigen::Index>(side) * side != dim)
        throw ContractError("model dimensionality " + std::to_string(dim) +
                            " is not a perfect square");
    return side;
}

void run_denoise(const GlobalArgs& g, const std::string& model_path, const std::string& in,
                 const std::string& out, int stride) {
    const Network model = load_model(model_path);
    const GrayImage noisy = load_pgm(in);
    const PatchGrid grid =
        PatchGrid::cover(noisy.height, noisy.width, patch_side_of(model.input_dim()),
                         patch_side_of(model.output_dim()), stride);
    save_pgm(denoise_image(model, noisy, grid, g.threads), out);
    std::cout << "denoised " << in << " -> " << out << "\n";
}

void run_evaluate(const GlobalArgs& g, const std::string& model_path, const std::string& images,
                  const std::vector<double>& sigmas, std::vector<std::uint64_t> seeds, int stride,
                  const std::string& out_csv) {
    std::optional<Network> model;
    if (!model_path.empty()) model = load_model(model_path);
    if (seeds.empty()) seeds = {g.seed ? *g.seed : 1};
    const PsnrTable table =
        evaluate_suite(model ? &*model : nullptr, images, sigmas, seeds, stride, g.threads);
    if (out_csv.empty()) {
        write_psnr_csv(std::cout, table);
    } else {
        std::ofstream out(out_csv);
        if (!out) throw ParseError("cannot open " + out_csv + " for writing");
        write_psnr_csv(out, table);
        std::cout << "wrote " << out_csv << "\n";
    }
}

void run_analyze_dict(const std::string& model_path, const std::string& out_dir,
                      double threshold, double bin_width) {
    const Network model = load_model(model_path);
    const Dictionary dict = Dictionary::from_output_layer(model);
    fs::create_directories(out_dir);
    const fs::path out(out_dir);

    save_pgm(atom_montage(dict, patch_side_of(dict.dim())), out / "atoms.pgm");
    {
        std::ofstream hist(out / "histogram.csv");
        write_histogram_csv(hist, angle_histogram(dict, bin_width), bin_width);
    }
    const PairOrdering pairs = greedy_pair_sort(dict);
    const double fraction = reversed_pair_fraction(dict, threshold);
    {
        std::ofstream summary(out / "summary.csv");
        summary << std::setprecision(17);
        summary << "atoms,pairs,threshold_degrees,reversed_fraction,max_pair_angle\n"
                << dict.count() << "," << pairs.pairs.size() << "," << threshold << ","
                << fraction << "," << pairs.pairs.front().angle_degrees << "\n";
    }
    std::cout << "atoms: " << dict.count() << "\n"
              << "reversed-pair fraction beyond " << threshold << " deg: " << fraction << "\n"
              << "largest pair angle: " << pairs.pairs.front().angle_degrees << " deg\n"
              << "analysis written to " << out_dir << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dual-pathway rectifier network image-denoising toolkit"};
    app.require_subcommand(1);
    app.fallthrough();
    app.failure_message(CLI::FailureMessage::help);

    GlobalArgs g;
    app.add_option("--seed", g.seed, "seed for sampling / noise / training");
    app.add_option("--config", g.config_path, "experiment config JSON")
        ->check(CLI::ExistingFile);
    app.add_option("--threads", g.threads, "internal parallelism cap (default 1)")
        ->check(CLI::PositiveNumber);

    // dataset build
    auto* dataset = app.add_subcommand("dataset", "dataset operations");
    dataset->require_subcommand(1);
    auto* build = dataset->add_subcommand("build", "sample a DPDS patch dataset from a corpus");
    std::string build_out = "dataset.dpds";
    std::string build_corpus;
    std::optional<double> build_sigma;
    std::optional<std::int64_t> build_n;
    std::optional<int> build_patch_in, build_patch_out;
    build->add_option("--out", build_out, "output DPDS file");
    build->add_option("--corpus", build_corpus, "PGM corpus directory (overrides config)");
    build->add_option("--sigma", build_sigma, "noise std on the 0-255 scale");
    build->add_option("--n", build_n, "number of samples");
    build->add_option("--patch-in", build_patch_in, "input patch side");
    build->add_option("--patch-out", build_patch_out, "target patch side");

    // train
    auto* train = app.add_subcommand("train", "train a denoiser on a DPDS dataset");
    std::string train_dataset, train_model = "model.dprn", train_log;
    std::optional<std::string> train_activation;
    std::vector<Eigen::Index> train_widths;
    train->add_option("--dataset", train_dataset, "DPDS dataset file")->required();
    train->add_option("--out", train_model, "output model file");
    train->add_option("--log", train_log, "per-minibatch loss CSV");
    train->add_option("--activation", train_activation,
                      "hidden activation: rectifier | tanh | dual_pathway");
    train->add_option("--widths", train_widths, "hidden layer widths")->delimiter(',');

    // denoise
    auto* denoise = app.add_subcommand("denoise", "denoise a PGM image with a trained model");
    std::string den_model, den_in, den_out = "denoised.pgm";
    int den_stride = 3;
    denoise->add_option("--model", den_model, "DPRN model file")->required();
    denoise->add_option("--in", den_in, "noisy input PGM")->required();
    denoise->add_option("--out", den_out, "output PGM");
    denoise->add_option("--stride", den_stride, "patch stride")->check(CLI::PositiveNumber);

    // add-noise
    auto* add_noise = app.add_subcommand("add-noise", "synthesize AWGN on a PGM image");
    double an_sigma = 25.0;
    std::string an_in, an_out = "noisy.pgm";
    add_noise->add_option("--sigma", an_sigma, "noise std on the 0-255 scale")->required();
    add_noise->add_option("--in", an_in, "clean input PGM")->required();
    add_noise->add_option("--out", an_out, "output PGM");

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "PSNR table over an image directory");
    std::string ev_model, ev_images, ev_out;
    std::vector<double> ev_sigmas = {15, 25, 35, 50, 75, 100};
    std::vector<std::uint64_t> ev_seeds;
    int ev_stride = 3;
    evaluate->add_option("--model", ev_model, "DPRN model (omit for the noisy baseline)");
    evaluate->add_option("--images", ev_images, "PGM image directory")->required();
    evaluate->add_option("--sigmas", ev_sigmas, "noise levels")->delimiter(',');
    evaluate->add_option("--seeds", ev_seeds, "noise seeds (averaged)")->delimiter(',');
    evaluate->add_option("--stride", ev_stride, "patch stride")->check(CLI::PositiveNumber);
    evaluate->add_option("--out", ev_out, "CSV output path (default: stdout)");

    // analyze-dict
    auto* analyze = app.add_subcommand("analyze-dict", "dictionary atom analysis of a model");
    std::string ad_model, ad_out = "analysis";
    double ad_threshold = 160.0, ad_bin_width = 3.0;
    analyze->add_option("--model", ad_model, "DPRN model file")->required();
    analyze->add_option("--out", ad_out, "output directory");
    analyze->add_option("--threshold", ad_threshold, "reversed-pair angle threshold (degrees)");
    analyze->add_option("--bin-width", ad_bin_width, "histogram bin width (degrees)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kUsageError;
    }

    try {
        if (build->parsed()) {
            ExperimentConfig cfg = config_or_default(g);
            if (!build_corpus.empty()) cfg.corpus_dir = build_corpus;
            if (build_sigma) cfg.sigma_255 = *build_sigma;
            if (build_n) cfg.n_train = *build_n;
            if (build_patch_in) cfg.patch_in = *build_patch_in;
            if (build_patch_out) cfg.patch_out = *build_patch_out;
            cfg.validate();
            const std::uint64_t seed = g.seed ? *g.seed : cfg.seeds.front();
            build_patch_dataset(cfg, build_out, seed);
            std::cout << "wrote " << cfg.n_train << " samples to " << build_out << "\n";
        } else if (train->parsed()) {
            ExperimentConfig cfg = config_or_default(g);
            if (train_activation) cfg.activation = activation_from_string(*train_activation);
            if (!train_widths.empty()) cfg.hidden_widths = train_widths;
            const Dataset data = load_dpds(train_dataset);
            cfg.patch_in = patch_side_of(data.inputs.cols());
            cfg.patch_out = patch_side_of(data.targets.cols());
            cfg.validate();
            const std::uint64_t seed = g.seed ? *g.seed : cfg.seeds.front();
            const TrainResult r =
                run_denoiser_training(cfg, data, seed, train_model, train_log, g.threads);
            std::cout << "trained " << cfg.train.n_minibatches << " minibatches; final loss "
                      << r.loss_curve.back() << "; model written to " << train_model << "\n";
        } else if (denoise->parsed()) {
            run_denoise(g, den_model, den_in, den_out, den_stride);
        } else if (add_noise->parsed()) {
            const GrayImage img = load_pgm(an_in);
            save_pgm(add_awgn(img, {an_sigma, g.seed ? *g.seed : 0}), an_out);
            std::cout << "added sigma=" << an_sigma << " noise: " << an_in << " -> " << an_out
                      << "\n";
        } else if (evaluate->parsed()) {
            run_evaluate(g, ev_model, ev_images, ev_sigmas, ev_seeds, ev_stride, ev_out);
        } else if (analyze->parsed()) {
            run_analyze_dict(ad_model, ad_out, ad_threshold, ad_bin_width);
        }
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kNumericError;
    } catch (const ParseError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kDataError;
    } catch (const ContractError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kDataError;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "filesystem error: " << e.what() << "\n";
        return kDataError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kDataError;
    }
    return 0;
}
