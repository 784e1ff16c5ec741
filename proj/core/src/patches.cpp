#include "dprn/patches.hpp"

#include <cmath>
#include <string>
#include <thread>

namespace dprn {
namespace {

std::vector<int> clamped_steps(int extent, int patch, int stride) {
    std::vector<int> steps;
    const int last = extent - patch;
    for (int p = 0;; p += stride) {
        if (p >= last) {
            steps.push_back(last);
            break;
        }
        steps.push_back(p);
    }
    return steps;
}

}  // namespace

PatchGrid PatchGrid::cover(int height, int width, int input_size, int output_size, int stride) {
    PatchGrid grid;
    grid.input_size = input_size;
    grid.output_size = output_size;
    grid.stride = stride;
    if (input_size < 1 || input_size % 2 == 0)
        throw ContractError("input_size must be odd and positive");
    if (output_size < 1 || output_size % 2 == 0 || output_size > input_size)
        throw ContractError("output_size must be odd, positive and <= input_size");
    if (stride < 1) throw ContractError("stride must be >= 1");
    if (height < input_size || width < input_size)
        throw ContractError("image " + std::to_string(height) + "x" + std::to_string(width) +
                            " smaller than patch size " + std::to_string(input_size));
    const auto rows = clamped_steps(height, input_size, stride);
    const auto cols = clamped_steps(width, input_size, stride);
    grid.positions.reserve(rows.size() * cols.size());
    for (int r : rows)
        for (int c : cols) grid.positions.emplace_back(r, c);
    return grid;
}

void PatchGrid::validate(int height, int width) const {
    if (input_size < 1 || output_size < 1 || output_size > input_size ||
        input_size % 2 == 0 || output_size % 2 == 0)
        throw ContractError("invalid patch sizes");
    for (const auto& [r, c] : positions)
        if (r < 0 || c < 0 || r + input_size > height || c + input_size > width)
            throw ContractError("patch position (" + std::to_string(r) + "," +
                                std::to_string(c) + ") out of bounds for " +
                                std::to_string(height) + "x" + std::to_string(width));
}

PatchMatrix extract_patches(const GrayImage& img, const PatchGrid& grid) {
    grid.validate(img.height, img.width);
    const int p = grid.input_size;
    const Eigen::Index n = static_cast<Eigen::Index>(grid.positions.size());
    PatchMatrix out;
    out.inputs.resize(n, static_cast<Eigen::Index>(p) * p);
    out.dc.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto [r0, c0] = grid.positions[static_cast<std::size_t>(i)];
        double sum = 0.0;
        Eigen::Index k = 0;
        for (int r = 0; r < p; ++r)
            for (int c = 0; c < p; ++c, ++k) {
                const double v = img.at(r0 + r, c0 + c);
                out.inputs(i, k) = v;
                sum += v;
            }
        const double mean = sum / static_cast<double>(p * p);
        out.dc(i) = mean;
        out.inputs.row(i).array() -= mean;
    }
    return out;
}

PatchAccumulator::PatchAccumulator(int height, int width, const PatchGrid& grid)
    : height_(height),
      width_(width),
      grid_(grid),
      num_(static_cast<std::size_t>(height) * width, 0.0),
      den_(static_cast<std::size_t>(height) * width, 0.0) {
    grid.validate(height, width);
    const int q = grid.output_size;
    const double sigma_w = static_cast<double>(q) / 4.0;
    const int half = q / 2;
    weights_.resize(static_cast<std::size_t>(q) * q);
    for (int u = 0; u < q; ++u)
        for (int v = 0; v < q; ++v)
            weights_[static_cast<std::size_t>(u) * q + v] =
                std::exp(-((u - half) * (u - half) + (v - half) * (v - half)) /
                         (2.0 * sigma_w * sigma_w));
}

void PatchAccumulator::add(std::size_t index, const Eigen::Ref<const Eigen::RowVectorXd>& block,
                           double dc) {
    if (index >= grid_.positions.size()) throw ContractError("patch index out of range");
    const int q = grid_.output_size;
    if (block.size() != static_cast<Eigen::Index>(q) * q)
        throw ContractError("output block has " + std::to_string(block.size()) +
                            " entries, expected " + std::to_string(q * q));
    const auto [r0, c0] = grid_.positions[index];
    const int m = grid_.margin();
    for (int u = 0; u < q; ++u) {
        const std::size_t row_base = static_cast<std::size_t>(r0 + m + u) * width_ + (c0 + m);
        for (int v = 0; v < q; ++v) {
            const double w = weights_[static_cast<std::size_t>(u) * q + v];
            num_[row_base + v] += w * (block(u * q + v) + dc);
            den_[row_base + v] += w;
        }
    }
}

GrayImage PatchAccumulator::finalize(const GrayImage* fallback) const {
    GrayImage out(height_, width_);
    std::vector<std::pair<int, int>> missing;
    for (int r = 0; r < height_; ++r)
        for (int c = 0; c < width_; ++c) {
            const std::size_t i = static_cast<std::size_t>(r) * width_ + c;
            if (den_[i] > 0.0) {
                out.pixels[i] = num_[i] / den_[i];
            } else if (fallback) {
                if (!fallback->same_dims(out)) throw ContractError("fallback dims differ");
                out.pixels[i] = fallback->pixels[i];
            } else if (missing.size() < 16) {
                missing.emplace_back(r, c);
            }
        }
    if (!fallback && !missing.empty()) {
        std::string list;
        for (const auto& [r, c] : missing)
            list += " (" + std::to_string(r) + "," + std::to_string(c) + ")";
        throw CoverageError("pixels with no block coverage and no fallback:" + list);
    }
    return out;
}

GrayImage aggregate(const Eigen::MatrixXd& outputs, const PatchGrid& grid,
                    const Eigen::VectorXd& dc, int height, int width,
                    const GrayImage* fallback) {
    if (outputs.rows() != static_cast<Eigen::Index>(grid.positions.size()))
        throw ContractError("outputs row count " + std::to_string(outputs.rows()) +
                            " != position count " + std::to_string(grid.positions.size()));
    if (dc.size() != outputs.rows()) throw ContractError("dc length != outputs rows");
    PatchAccumulator acc(height, width, grid);
    for (Eigen::Index i = 0; i < outputs.rows(); ++i)
        acc.add(static_cast<std::size_t>(i), outputs.row(i), dc(i));
    return acc.finalize(fallback);
}

GrayImage denoise_image(const Network& net, const GrayImage& noisy, const PatchGrid& grid,
                        int n_threads) {
    const Eigen::Index d_in = static_cast<Eigen::Index>(grid.input_size) * grid.input_size;
    const Eigen::Index d_out = static_cast<Eigen::Index>(grid.output_size) * grid.output_size;
    if (net.input_dim() != d_in || net.output_dim() != d_out)
        throw ContractError("network maps " + std::to_string(net.input_dim()) + "->" +
                            std::to_string(net.output_dim()) + " but grid needs " +
                            std::to_string(d_in) + "->" + std::to_string(d_out));
    grid.validate(noisy.height, noisy.width);

    PatchAccumulator acc(noisy.height, noisy.width, grid);
    const std::size_t total = grid.positions.size();
    const std::size_t chunk_size = 16384;
    PatchGrid sub = grid;  // reused container for chunked extraction
    for (std::size_t first = 0; first < total; first += chunk_size) {
        const std::size_t count = std::min(chunk_size, total - first);
        sub.positions.assign(grid.positions.begin() + static_cast<std::ptrdiff_t>(first),
                             grid.positions.begin() + static_cast<std::ptrdiff_t>(first + count));
        PatchMatrix batch = extract_patches(noisy, sub);
        Eigen::MatrixXd Y(batch.inputs.rows(), d_out);
        const int workers =
            std::max(1, std::min<int>(n_threads, static_cast<int>(batch.inputs.rows())));
        if (workers == 1) {
            Y = forward(net, batch.inputs);
        } else {
            std::vector<std::thread> pool;
            std::vector<std::exception_ptr> errors(workers);
            const Eigen::Index rows = batch.inputs.rows();
            const Eigen::Index piece = (rows + workers - 1) / workers;
            for (int w = 0; w < workers; ++w) {
                pool.emplace_back([&, w] {
                    try {
                        const Eigen::Index r0 = w * piece;
                        const Eigen::Index len = std::min(piece, rows - r0);
                        if (len > 0) Y.middleRows(r0, len) = forward(net, batch.inputs.middleRows(r0, len));
                    } catch (...) {
                        errors[static_cast<std::size_t>(w)] = std::current_exception();
                    }
                });
            }
            for (auto& t : pool) t.join();
            for (auto& e : errors)
                if (e) std::rethrow_exception(e);
        }
        for (Eigen::Index i = 0; i < Y.rows(); ++i)
            acc.add(first + static_cast<std::size_t>(i), Y.row(i), batch.dc(i));
    }
    return acc.finalize(&noisy);
}

}  // namespace dprn
