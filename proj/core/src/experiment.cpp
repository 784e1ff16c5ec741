#include "dprn/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "dprn/dictionary.hpp"
#include "dprn/metrics.hpp"
#include "dprn/noise.hpp"
#include "dprn/patches.hpp"
#include "dprn/pgm.hpp"
#include "dprn/model_io.hpp"
#include "dprn/rng.hpp"

namespace dprn {
namespace {

int patch_side_of(Eigen::Index dim, const char* what) {
    const int side = static_cast<int>(std::llround(std::sqrt(static_cast<double>(dim))));
    if (static_cast<Eigen::Index>(side) * side != dim)
        throw ContractError(std::string(what) + " dimensionality " + std::to_string(dim) +
                            " is not a perfect square");
    return side;
}

// Draws (noisy input, clean target, dc) patch records; one shared stream
// keeps file and in-memory builds identical for a given seed.
class PatchSampler {
public:
    PatchSampler(const std::vector<GrayImage>& images, int patch_in, int patch_out,
                 double sigma_255, std::uint64_t seed)
        : images_(images),
          patch_in_(patch_in),
          patch_out_(patch_out),
          sigma_(sigma_255 / 255.0),
          rng_(seed) {
        if (images.empty()) throw ContractError("empty corpus");
        if (patch_out > patch_in || (patch_in - patch_out) % 2 != 0)
            throw ContractError("patch_out must be <= patch_in with the same parity");
        for (const auto& img : images_)
            if (img.height < patch_in || img.width < patch_in)
                throw ContractError("patch size " + std::to_string(patch_in) +
                                    " larger than corpus image " + std::to_string(img.height) +
                                    "x" + std::to_string(img.width));
    }

    void next(float* input, float* target, float& dc) {
        const auto& img = images_[static_cast<std::size_t>(rng_.below(images_.size()))];
        const int r0 = static_cast<int>(rng_.below(static_cast<std::uint64_t>(img.height - patch_in_ + 1)));
        const int c0 = static_cast<int>(rng_.below(static_cast<std::uint64_t>(img.width - patch_in_ + 1)));
        noisy_.resize(static_cast<std::size_t>(patch_in_) * patch_in_);
        double sum = 0.0;
        std::size_t k = 0;
        for (int r = 0; r < patch_in_; ++r)
            for (int c = 0; c < patch_in_; ++c, ++k) {
                const double v = img.at(r0 + r, c0 + c) + sigma_ * rng_.normal();
                noisy_[k] = v;
                sum += v;
            }
        const double mean = sum / static_cast<double>(noisy_.size());
        dc = static_cast<float>(mean);
        for (std::size_t i = 0; i < noisy_.size(); ++i)
            input[i] = static_cast<float>(noisy_[i] - mean);
        const int m = (patch_in_ - patch_out_) / 2;
        std::size_t t = 0;
        for (int r = 0; r < patch_out_; ++r)
            for (int c = 0; c < patch_out_; ++c, ++t)
                target[t] = static_cast<float>(img.at(r0 + m + r, c0 + m + c) - mean);
    }

private:
    const std::vector<GrayImage>& images_;
    int patch_in_, patch_out_;
    double sigma_;
    Rng rng_;
    std::vector<double> noisy_;
};

double test_rmse(const Network& net, const Dataset& test) {
    const Eigen::Index chunk = 4096;
    double sse = 0.0;
    for (Eigen::Index r0 = 0; r0 < test.size(); r0 += chunk) {
        const Eigen::Index len = std::min(chunk, test.size() - r0);
        Eigen::MatrixXd X = test.inputs.middleRows(r0, len).cast<double>();
        Eigen::MatrixXd Y = test.targets.middleRows(r0, len).cast<double>();
        sse += (forward(net, X) - Y).squaredNorm();
    }
    return std::sqrt(sse / (static_cast<double>(test.size()) *
                            static_cast<double>(test.targets.cols())));
}

VariantAnalysis analyze_variant(const Network& net, const Dataset& test, double threshold,
                                const std::filesystem::path& out_dir, const std::string& tag,
                                int patch_side) {
    VariantAnalysis a;
    a.test_rmse = test_rmse(net, test);
    const Dictionary dict = Dictionary::from_output_layer(net);
    a.reversed_fraction = reversed_pair_fraction(dict, threshold);
    a.reversed_fraction_170 = reversed_pair_fraction(dict, 170.0);
    a.max_pair_angle = greedy_pair_sort(dict).pairs.front().angle_degrees;
    if (!out_dir.empty()) {
        save_pgm(atom_montage(dict, patch_side), out_dir / (tag + "_atoms.pgm"));
        std::ofstream hist(out_dir / (tag + "_hist.csv"));
        write_histogram_csv(hist, angle_histogram(dict, 3.0), 3.0);
    }
    return a;
}

}  // namespace

void ExperimentConfig::validate() const {
    if (patch_in < 1 || patch_out < 1 || patch_out > patch_in ||
        (patch_in - patch_out) % 2 != 0)
        throw ContractError("patch sizes must satisfy 0 < patch_out <= patch_in, same parity");
    if (!(sigma_255 > 0.0)) throw ContractError("sigma_255 must be positive");
    if (n_train < 1 || n_test < 1) throw ContractError("n_train and n_test must be >= 1");
    if (hidden_widths.empty()) throw ContractError("at least one hidden width required");
    for (auto w : hidden_widths)
        if (w < 1) throw ContractError("hidden widths must be positive");
    if (seeds.empty()) throw ContractError("at least one seed required");
    lbfgs.validate();
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("config is not valid JSON: ") + e.what());
    }
    ExperimentConfig cfg;
    try {
        if (j.contains("corpus_dir")) cfg.corpus_dir = j["corpus_dir"].get<std::string>();
        if (j.contains("patch_in")) cfg.patch_in = j["patch_in"].get<int>();
        if (j.contains("patch_out")) cfg.patch_out = j["patch_out"].get<int>();
        if (j.contains("sigma_255")) cfg.sigma_255 = j["sigma_255"].get<double>();
        if (j.contains("n_train")) cfg.n_train = j["n_train"].get<std::int64_t>();
        if (j.contains("n_test")) cfg.n_test = j["n_test"].get<std::int64_t>();
        if (j.contains("hidden_widths"))
            cfg.hidden_widths = j["hidden_widths"].get<std::vector<Eigen::Index>>();
        if (j.contains("activation"))
            cfg.activation = activation_from_string(j["activation"].get<std::string>());
        if (j.contains("tied")) cfg.tied = j["tied"].get<bool>();
        if (j.contains("seeds")) cfg.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
        if (j.contains("train")) {
            const auto& t = j["train"];
            if (t.contains("minibatch_size"))
                cfg.train.minibatch_size = t["minibatch_size"].get<Eigen::Index>();
            if (t.contains("n_minibatches"))
                cfg.train.n_minibatches = t["n_minibatches"].get<int>();
            if (t.contains("iterations_per_minibatch"))
                cfg.train.iterations_per_minibatch = t["iterations_per_minibatch"].get<int>();
            if (t.contains("seed")) cfg.train.seed = t["seed"].get<std::uint64_t>();
        }
        if (j.contains("lbfgs")) {
            const auto& l = j["lbfgs"];
            if (l.contains("memory")) cfg.lbfgs.memory = l["memory"].get<int>();
            if (l.contains("c1")) cfg.lbfgs.c1 = l["c1"].get<double>();
            if (l.contains("c2")) cfg.lbfgs.c2 = l["c2"].get<double>();
            if (l.contains("max_iterations"))
                cfg.lbfgs.max_iterations = l["max_iterations"].get<int>();
            if (l.contains("grad_tolerance"))
                cfg.lbfgs.grad_tolerance = l["grad_tolerance"].get<double>();
            if (l.contains("max_line_search_steps"))
                cfg.lbfgs.max_line_search_steps = l["max_line_search_steps"].get<int>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed config field: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig ExperimentConfig::from_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json_text(buf.str());
}

std::string ExperimentConfig::to_json_text() const {
    nlohmann::json j;
    j["corpus_dir"] = corpus_dir.string();
    j["patch_in"] = patch_in;
    j["patch_out"] = patch_out;
    j["sigma_255"] = sigma_255;
    j["n_train"] = n_train;
    j["n_test"] = n_test;
    j["hidden_widths"] = hidden_widths;
    j["activation"] = to_string(activation);
    j["tied"] = tied;
    j["seeds"] = seeds;
    j["train"] = {{"minibatch_size", train.minibatch_size},
                  {"n_minibatches", train.n_minibatches},
                  {"iterations_per_minibatch", train.iterations_per_minibatch},
                  {"seed", train.seed}};
    j["lbfgs"] = {{"memory", lbfgs.memory},
                  {"c1", lbfgs.c1},
                  {"c2", lbfgs.c2},
                  {"max_iterations", lbfgs.max_iterations},
                  {"grad_tolerance", lbfgs.grad_tolerance},
                  {"max_line_search_steps", lbfgs.max_line_search_steps}};
    return j.dump(2);
}

std::vector<GrayImage> load_corpus(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir))
        throw ParseError("corpus directory " + dir.string() + " does not exist");
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".pgm")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    std::vector<GrayImage> images;
    images.reserve(files.size());
    for (const auto& f : files) images.push_back(load_pgm(f));
    return images;
}

Dataset sample_patch_dataset(const std::vector<GrayImage>& images, int patch_in, int patch_out,
                             double sigma_255, std::int64_t n, std::uint64_t seed) {
    if (n < 1) throw ContractError("need at least one sample");
    PatchSampler sampler(images, patch_in, patch_out, sigma_255, seed);
    Dataset ds;
    const Eigen::Index d_in = static_cast<Eigen::Index>(patch_in) * patch_in;
    const Eigen::Index d_out = static_cast<Eigen::Index>(patch_out) * patch_out;
    ds.inputs.resize(n, d_in);
    ds.targets.resize(n, d_out);
    ds.dc.resize(n);
    std::vector<float> in_buf(static_cast<std::size_t>(d_in)), out_buf(static_cast<std::size_t>(d_out));
    for (Eigen::Index i = 0; i < n; ++i) {
        float dc;
        sampler.next(in_buf.data(), out_buf.data(), dc);
        for (Eigen::Index j = 0; j < d_in; ++j) ds.inputs(i, j) = in_buf[static_cast<std::size_t>(j)];
        for (Eigen::Index j = 0; j < d_out; ++j) ds.targets(i, j) = out_buf[static_cast<std::size_t>(j)];
        ds.dc(i) = dc;
    }
    return ds;
}

void build_patch_dataset(const ExperimentConfig& cfg, const std::filesystem::path& out_file,
                         std::uint64_t seed) {
    cfg.validate();
    const auto images = load_corpus(cfg.corpus_dir);
    PatchSampler sampler(images, cfg.patch_in, cfg.patch_out, cfg.sigma_255, seed);

    std::ofstream out(out_file, std::ios::binary | std::ios::trunc);
    if (!out) throw ParseError("cannot open " + out_file.string() + " for writing");
    const std::uint32_t version = 1;
    const std::uint64_t n = static_cast<std::uint64_t>(cfg.n_train);
    const std::uint32_t d_in = static_cast<std::uint32_t>(cfg.patch_in * cfg.patch_in);
    const std::uint32_t d_out = static_cast<std::uint32_t>(cfg.patch_out * cfg.patch_out);
    out.write("DPDS", 4);
    out.write(reinterpret_cast<const char*>(&version), 4);
    out.write(reinterpret_cast<const char*>(&n), 8);
    out.write(reinterpret_cast<const char*>(&d_in), 4);
    out.write(reinterpret_cast<const char*>(&d_out), 4);
    std::vector<float> record(static_cast<std::size_t>(d_in) + d_out + 1);
    for (std::uint64_t i = 0; i < n; ++i) {
        sampler.next(record.data(), record.data() + d_in, record[record.size() - 1]);
        out.write(reinterpret_cast<const char*>(record.data()),
                  static_cast<std::streamsize>(record.size() * sizeof(float)));
    }
    if (!out) throw ParseError("short write to " + out_file.string());
}

Network with_dual_hidden(const Network& net) {
    std::vector<LayerSpec> specs = net.layers();
    for (std::size_t l = 0; l + 1 < specs.size(); ++l) {
        if (specs[l].activation != Activation::Rectifier)
            throw ContractError("hidden layer " + std::to_string(l) + " is not Rectifier");
        specs[l].activation = Activation::DualPathway;
    }
    Network out(std::move(specs));
    for (std::size_t l = 0; l < out.layer_count(); ++l) {
        if (!out.tied(l)) out.weight(l) = net.weight(l);
        out.bias(l) = net.bias(l);
        // thresholds stay zero: the activation starts at its identity point
    }
    return out;
}

AutoencoderReport run_autoencoder_experiment(const ExperimentConfig& cfg,
                                             const std::filesystem::path& out_dir,
                                             double threshold_degrees, int n_threads) {
    cfg.validate();
    if (cfg.patch_in != cfg.patch_out)
        throw ContractError("autoencoder experiment needs patch_in == patch_out");
    const auto corpus = load_corpus(cfg.corpus_dir);
    if (corpus.size() < 2)
        throw ContractError("autoencoder experiment needs >= 2 corpus images (train/test split)");
    const std::size_t n_test_imgs = std::max<std::size_t>(1, corpus.size() / 5);
    std::vector<GrayImage> train_imgs(corpus.begin(),
                                      corpus.end() - static_cast<std::ptrdiff_t>(n_test_imgs));
    std::vector<GrayImage> test_imgs(corpus.end() - static_cast<std::ptrdiff_t>(n_test_imgs),
                                     corpus.end());

    if (!out_dir.empty()) std::filesystem::create_directories(out_dir);

    AutoencoderReport report;
    report.threshold_degrees = threshold_degrees;
    for (const std::uint64_t seed : cfg.seeds) {
        const Dataset train_ds = sample_patch_dataset(train_imgs, cfg.patch_in, cfg.patch_out,
                                                      cfg.sigma_255, cfg.n_train, seed);
        const Dataset test_ds =
            sample_patch_dataset(test_imgs, cfg.patch_in, cfg.patch_out, cfg.sigma_255,
                                 cfg.n_test, Rng(seed).split(1).seed());
        for (const Eigen::Index width : cfg.hidden_widths) {
            Network base = Network::make_mlp(train_ds.inputs.cols(), {width},
                                             train_ds.targets.cols(), Activation::Rectifier,
                                             cfg.tied);
            initialize_parameters(base, Rng(seed).split(static_cast<std::uint64_t>(width)).seed());
            Network dual_base = with_dual_hidden(base);

            TrainConfig tc = cfg.train;
            tc.seed = seed;  // identical minibatch sequence for both variants
            const TrainResult plain =
                minibatch_train(std::move(base), train_ds.inputs, train_ds.targets, tc,
                                cfg.lbfgs, n_threads);
            const TrainResult dual =
                minibatch_train(std::move(dual_base), train_ds.inputs, train_ds.targets, tc,
                                cfg.lbfgs, n_threads);

            AutoencoderRun run;
            run.seed = seed;
            run.width = static_cast<int>(width);
            const std::string stem =
                "seed" + std::to_string(seed) + "_width" + std::to_string(width);
            run.plain = analyze_variant(plain.params, test_ds, threshold_degrees, out_dir,
                                        stem + "_plain", cfg.patch_in);
            run.dual = analyze_variant(dual.params, test_ds, threshold_degrees, out_dir,
                                       stem + "_dual", cfg.patch_in);
            report.runs.push_back(run);
        }
    }

    if (!out_dir.empty()) {
        std::ofstream csv(out_dir / "report.csv");
        csv << std::setprecision(17);
        csv << "seed,width,variant,test_rmse,reversed_fraction_"
            << threshold_degrees << ",reversed_fraction_170,max_pair_angle\n";
        for (const auto& run : report.runs) {
            csv << run.seed << "," << run.width << ",plain," << run.plain.test_rmse << ","
                << run.plain.reversed_fraction << "," << run.plain.reversed_fraction_170 << ","
                << run.plain.max_pair_angle << "\n";
            csv << run.seed << "," << run.width << ",dual," << run.dual.test_rmse << ","
                << run.dual.reversed_fraction << "," << run.dual.reversed_fraction_170 << ","
                << run.dual.max_pair_angle << "\n";
        }
    }
    return report;
}

TrainResult train_denoiser(const ExperimentConfig& cfg, const Dataset& data, std::uint64_t seed,
                           int n_threads) {
    cfg.validate();
    const Eigen::Index d_in = static_cast<Eigen::Index>(cfg.patch_in) * cfg.patch_in;
    const Eigen::Index d_out = static_cast<Eigen::Index>(cfg.patch_out) * cfg.patch_out;
    if (data.inputs.cols() != d_in || data.targets.cols() != d_out)
        throw ContractError("dataset dims do not match cfg patch sizes");
    Network net = Network::make_mlp(d_in, cfg.hidden_widths, d_out, cfg.activation, cfg.tied);
    initialize_parameters(net, seed);
    TrainConfig tc = cfg.train;
    tc.seed = seed;
    return minibatch_train(std::move(net), data.inputs, data.targets, tc, cfg.lbfgs, n_threads);
}

TrainResult run_denoiser_training(const ExperimentConfig& cfg, const Dataset& data,
                                  std::uint64_t seed, const std::filesystem::path& model_out,
                                  const std::filesystem::path& log_out, int n_threads) {
    TrainResult result;
    try {
        result = train_denoiser(cfg, data, seed, n_threads);
    } catch (const TrainingFailure& e) {
        std::filesystem::path checkpoint = model_out;
        checkpoint += ".checkpoint.dprn";
        save_model(e.last_good_params, checkpoint);
        throw;
    }
    save_model(result.params, model_out);
    if (!log_out.empty()) {
        std::ofstream log(log_out);
        write_loss_csv(log, result.loss_curve);
    }
    return result;
}

Eigen::VectorXd PsnrTable::averages() const {
    return values.colwise().mean().transpose();
}

PsnrTable evaluate_suite(const Network* model, const std::filesystem::path& image_dir,
                         const std::vector<double>& sigmas,
                         const std::vector<std::uint64_t>& seeds, int stride, int n_threads) {
    if (sigmas.empty() || seeds.empty()) throw ContractError("need at least one sigma and seed");
    if (!std::filesystem::is_directory(image_dir))
        throw ParseError("image directory " + image_dir.string() + " does not exist");
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(image_dir))
        if (entry.is_regular_file() && entry.path().extension() == ".pgm")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw ParseError("no .pgm images in " + image_dir.string());

    PsnrTable table;
    table.sigmas = sigmas;
    std::vector<GrayImage> images;
    for (const auto& f : files) {
        table.images.push_back(f.stem().string());
        images.push_back(load_pgm(f));
    }
    table.values.resize(static_cast<Eigen::Index>(images.size()),
                        static_cast<Eigen::Index>(sigmas.size()));

    int in_side = 0, out_side = 0;
    if (model) {
        in_side = patch_side_of(model->input_dim(), "model input");
        out_side = patch_side_of(model->output_dim(), "model output");
    }

    // every (image, sigma) cell is an independent task; cells do not depend
    // on scheduling, so results are identical for any thread count
    std::vector<std::pair<std::size_t, std::size_t>> tasks;
    for (std::size_t i = 0; i < images.size(); ++i)
        for (std::size_t j = 0; j < sigmas.size(); ++j) tasks.emplace_back(i, j);

    std::atomic<std::size_t> cursor{0};
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(std::max(1, n_threads)));
    auto worker = [&](std::size_t wid) {
        try {
            for (;;) {
                const std::size_t k = cursor.fetch_add(1);
                if (k >= tasks.size()) break;
                const auto [i, j] = tasks[k];
                const GrayImage& clean = images[i];
                double acc = 0.0;
                for (std::size_t s = 0; s < seeds.size(); ++s) {
                    const std::uint64_t noise_seed =
                        Rng(seeds[s]).split(i * sigmas.size() + j).seed();
                    const GrayImage noisy = add_awgn(clean, {sigmas[j], noise_seed});
                    if (model) {
                        const PatchGrid grid =
                            PatchGrid::cover(clean.height, clean.width, in_side, out_side, stride);
                        acc += psnr(clean, denoise_image(*model, noisy, grid));
                    } else {
                        acc += psnr(clean, noisy);
                    }
                }
                table.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                    acc / static_cast<double>(seeds.size());
            }
        } catch (...) {
            errors[wid] = std::current_exception();
        }
    };
    if (n_threads <= 1) {
        worker(0);
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < n_threads; ++w) pool.emplace_back(worker, static_cast<std::size_t>(w));
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return table;
}

void write_psnr_csv(std::ostream& out, const PsnrTable& table) {
    out << std::setprecision(10);
    out << "image";
    for (double s : table.sigmas) out << "," << s;
    out << "\n";
    for (std::size_t i = 0; i < table.images.size(); ++i) {
        out << table.images[i];
        for (Eigen::Index j = 0; j < table.values.cols(); ++j)
            out << "," << table.values(static_cast<Eigen::Index>(i), j);
        out << "\n";
    }
    const Eigen::VectorXd avg = table.averages();
    out << "Average";
    for (Eigen::Index j = 0; j < avg.size(); ++j) out << "," << avg(j);
    out << "\n";
}

void write_loss_csv(std::ostream& out, const std::vector<double>& loss_curve) {
    out << std::setprecision(17);
    out << "minibatch,loss\n";
    for (std::size_t i = 0; i < loss_curve.size(); ++i) out << i << "," << loss_curve[i] << "\n";
}

}  // namespace dprn
