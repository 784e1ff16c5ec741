#pragma once

#include <Eigen/Dense>
#include <array>
#include <optional>
#include <ostream>
#include <vector>

#include "dprn/image.hpp"
#include "dprn/network.hpp"

namespace dprn {

/// Atom matrix: one atom per column, taken from the output-layer weight (for
/// tied autoencoders the columns of W2 = W1^T).
struct Dictionary {
    Eigen::MatrixXd atoms;  // d x K

    static Dictionary from_output_layer(const Network& net);

    Eigen::Index dim() const { return atoms.rows(); }
    Eigen::Index count() const { return atoms.cols(); }
    void validate() const;  // no zero columns (norm > 1e-12)
};

/// Pairwise angles in degrees: arccos of the clamped cosine similarity,
/// zero diagonal.
Eigen::MatrixXd angle_matrix(const Dictionary& dict);

struct AtomPair {
    int i, j;
    double angle_degrees;
};

/// Greedy biggest-angle pairing: repeatedly removes the maximal-angle pair
/// among the remaining atoms; ties break to the smallest (i, then j). Angles
/// come out nonincreasing; odd K leaves one atom over.
struct PairOrdering {
    std::vector<AtomPair> pairs;
    std::optional<int> leftover;
};
PairOrdering greedy_pair_sort(const Dictionary& dict);

/// Counts of angles over all unordered pairs i<j in equal bins over
/// [0, 180] degrees. bin_width must divide 180.
std::vector<std::size_t> angle_histogram(const Dictionary& dict, double bin_width_degrees);

/// Fraction of greedy pairs whose angle exceeds the threshold (valid range
/// (90, 180]).
double reversed_pair_fraction(const Dictionary& dict, double threshold_degrees);

/// Per-sample trace of first-layer unit responses, one row per input patch,
/// sorted by the first column descending.
///
/// Dual-pathway layer: columns are z+t (original pathway pre-rectifier),
/// -z+t (the synthesized companion), and g(z) (equivalent unit output).
/// Other activations require an explicit companion unit: columns are z_unit,
/// z_companion, and the unit's post-activation.
struct ActivationTrace {
    std::array<const char*, 3> columns;
    std::vector<std::array<double, 3>> rows;
};
ActivationTrace activation_trace(const Network& net, const Eigen::MatrixXd& patches, int unit,
                                 std::optional<int> companion = std::nullopt);

/// Atoms as image tiles in greedy-pair order, pair members horizontally
/// adjacent, laid out on a near-square tile grid with 1-pixel black
/// separators. Each atom is independently affine-normalized to [0,1];
/// zero-range atoms render mid-gray.
GrayImage atom_montage(const Dictionary& dict, int patch_side);

void write_histogram_csv(std::ostream& out, const std::vector<std::size_t>& counts,
                         double bin_width_degrees);
void write_trace_csv(std::ostream& out, const ActivationTrace& trace);

}  // namespace dprn
