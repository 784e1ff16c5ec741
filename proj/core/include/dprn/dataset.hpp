#pragma once

#include <Eigen/Dense>
#include <filesystem>

#include "dprn/errors.hpp"

namespace dprn {

/// Training records: noisy DC-removed inputs, clean DC-removed targets, and
/// the removed means. Stored single-precision, matching the DPDS payload;
/// training promotes minibatches to double.
struct Dataset {
    Eigen::MatrixXf inputs;   // n x d_in
    Eigen::MatrixXf targets;  // n x d_out
    Eigen::VectorXf dc;       // n

    Eigen::Index size() const { return inputs.rows(); }
    void validate() const;
};

/// DPDS file format: magic "DPDS", u32 version=1, u64 n, u32 d_in, u32 d_out,
/// then n records of (d_in + d_out + 1) little-endian float32: input row,
/// target row, dc.
void save_dpds(const Dataset& ds, const std::filesystem::path& path);
Dataset load_dpds(const std::filesystem::path& path);

}  // namespace dprn
