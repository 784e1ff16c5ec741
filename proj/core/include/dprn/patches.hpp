#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "dprn/image.hpp"
#include "dprn/network.hpp"

namespace dprn {

/// Overlapping patch layout: input patches of input_size^2 pixels whose
/// central output_size^2 block is reconstructed. Positions are top-left
/// corners of input patches, fully inside the image.
struct PatchGrid {
    int input_size = 17;
    int output_size = 9;
    int stride = 3;
    std::vector<std::pair<int, int>> positions;  // (row, col), row-major scan

    /// Regular grid with the given stride; the final row/column of patches is
    /// clamped to the image edge so the whole frame is traversed.
    static PatchGrid cover(int height, int width, int input_size, int output_size, int stride);

    int margin() const { return (input_size - output_size) / 2; }
    void validate(int height, int width) const;
};

struct PatchMatrix {
    Eigen::MatrixXd inputs;  // one DC-removed vectorized patch per row
    Eigen::VectorXd dc;      // removed per-patch means
};

/// Vectorizes every grid patch (row-major within the patch) minus its own
/// mean. Row i corresponds to grid.positions[i].
PatchMatrix extract_patches(const GrayImage& img, const PatchGrid& grid);

/// Streaming output-block accumulator with Gaussian weighting
/// exp(-(u^2+v^2)/(2*sigma_w^2)), sigma_w = output_size/4, (u,v) the offset
/// from the block center.
class PatchAccumulator {
public:
    PatchAccumulator(int height, int width, const PatchGrid& grid);

    /// Adds the output block of grid.positions[index]; `block` is the
    /// vectorized output (row-major), `dc` the mean to restore.
    void add(std::size_t index, const Eigen::Ref<const Eigen::RowVectorXd>& block, double dc);

    /// Weight-normalized image. Pixels no block touched are copied from
    /// `fallback`; without one they raise CoverageError.
    GrayImage finalize(const GrayImage* fallback) const;

private:
    int height_, width_;
    const PatchGrid& grid_;
    std::vector<double> weights_;  // output_size^2 Gaussian window
    std::vector<double> num_, den_;
};

/// Places every output block (plus its dc) at the center of its source patch
/// and Gaussian-averages the overlaps. outputs has one output_size^2 row per
/// grid position.
GrayImage aggregate(const Eigen::MatrixXd& outputs, const PatchGrid& grid,
                    const Eigen::VectorXd& dc, int height, int width,
                    const GrayImage* fallback = nullptr);

/// extract -> forward -> aggregate. Patches stream through the network in
/// chunks; uncovered border pixels are copied from the noisy input. Output is
/// not clamped. n_threads parallelizes the forward passes over row ranges.
GrayImage denoise_image(const Network& net, const GrayImage& noisy, const PatchGrid& grid,
                        int n_threads = 1);

}  // namespace dprn
