#include "dprn/dictionary.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>

namespace dprn {
namespace {

constexpr double kRadToDeg = 180.0 / 3.141592653589793238462643383279502884;

}  // namespace

Dictionary Dictionary::from_output_layer(const Network& net) {
    Dictionary d;
    d.atoms = net.effective_weight(net.layer_count() - 1);
    d.validate();
    return d;
}

void Dictionary::validate() const {
    if (atoms.size() == 0) throw ContractError("empty dictionary");
    for (Eigen::Index k = 0; k < atoms.cols(); ++k)
        if (atoms.col(k).norm() <= 1e-12)
            throw ContractError("atom " + std::to_string(k) + " has (near-)zero norm");
}

Eigen::MatrixXd angle_matrix(const Dictionary& dict) {
    dict.validate();
    const Eigen::Index K = dict.count();
    Eigen::VectorXd norms = dict.atoms.colwise().norm();
    Eigen::MatrixXd angles(K, K);
    for (Eigen::Index i = 0; i < K; ++i) {
        angles(i, i) = 0.0;
        for (Eigen::Index j = i + 1; j < K; ++j) {
            double cosine = dict.atoms.col(i).dot(dict.atoms.col(j)) / (norms(i) * norms(j));
            cosine = std::clamp(cosine, -1.0, 1.0);
            const double deg = std::acos(cosine) * kRadToDeg;
            angles(i, j) = deg;
            angles(j, i) = deg;
        }
    }
    return angles;
}

PairOrdering greedy_pair_sort(const Dictionary& dict) {
    const Eigen::Index K = dict.count();
    if (K < 2) throw ContractError("greedy pairing needs at least two atoms");
    const Eigen::MatrixXd angles = angle_matrix(dict);
    std::vector<int> remaining(static_cast<std::size_t>(K));
    for (Eigen::Index k = 0; k < K; ++k) remaining[static_cast<std::size_t>(k)] = static_cast<int>(k);

    PairOrdering order;
    while (remaining.size() >= 2) {
        int best_i = -1, best_j = -1;
        double best = -1.0;
        for (std::size_t a = 0; a < remaining.size(); ++a)
            for (std::size_t b = a + 1; b < remaining.size(); ++b) {
                const double ang = angles(remaining[a], remaining[b]);
                if (ang > best) {  // strict: first (lowest-index) max wins ties
                    best = ang;
                    best_i = remaining[a];
                    best_j = remaining[b];
                }
            }
        order.pairs.push_back({best_i, best_j, best});
        std::erase(remaining, best_i);
        std::erase(remaining, best_j);
    }
    if (!remaining.empty()) order.leftover = remaining.front();
    return order;
}

std::vector<std::size_t> angle_histogram(const Dictionary& dict, double bin_width_degrees) {
    if (!(bin_width_degrees > 0.0) || bin_width_degrees > 180.0)
        throw ContractError("bin width must lie in (0, 180]");
    const double ratio = 180.0 / bin_width_degrees;
    const auto bins = static_cast<std::size_t>(std::llround(ratio));
    if (std::abs(ratio - static_cast<double>(bins)) > 1e-9)
        throw ContractError("bin width must divide 180 degrees");
    const Eigen::MatrixXd angles = angle_matrix(dict);
    std::vector<std::size_t> counts(bins, 0);
    for (Eigen::Index i = 0; i < angles.rows(); ++i)
        for (Eigen::Index j = i + 1; j < angles.cols(); ++j) {
            auto bin = static_cast<std::size_t>(angles(i, j) / bin_width_degrees);
            if (bin >= bins) bin = bins - 1;  // angle == 180 lands in the last bin
            ++counts[bin];
        }
    return counts;
}

double reversed_pair_fraction(const Dictionary& dict, double threshold_degrees) {
    if (!(threshold_degrees > 90.0) || threshold_degrees > 180.0)
        throw ContractError("threshold must lie in (90, 180]");
    const PairOrdering order = greedy_pair_sort(dict);
    if (order.pairs.empty()) return 0.0;
    std::size_t over = 0;
    for (const auto& p : order.pairs)
        if (p.angle_degrees > threshold_degrees) ++over;
    return static_cast<double>(over) / static_cast<double>(order.pairs.size());
}

ActivationTrace activation_trace(const Network& net, const Eigen::MatrixXd& patches, int unit,
                                 std::optional<int> companion) {
    const auto& spec = net.layers().front();
    if (unit < 0 || unit >= spec.out_dim) throw ContractError("invalid unit index");
    if (patches.cols() != spec.in_dim)
        throw ContractError("patch dimensionality does not match the first layer");

    const Eigen::MatrixXd W = net.effective_weight(0);
    const Eigen::VectorXd z =
        (patches * W.row(unit).transpose()).array() + net.bias(0)(unit);

    ActivationTrace trace;
    trace.rows.reserve(static_cast<std::size_t>(patches.rows()));
    if (spec.activation == Activation::DualPathway) {
        const double t = net.thresholds(0)(unit);
        trace.columns = {"pre_original", "pre_companion", "post_equivalent"};
        for (Eigen::Index i = 0; i < z.size(); ++i) {
            const double g = std::max(0.0, z(i) + t) - std::max(0.0, -z(i) + t);
            trace.rows.push_back({z(i) + t, -z(i) + t, g});
        }
    } else {
        if (!companion) throw ContractError("non-dual networks need an explicit companion unit");
        if (*companion < 0 || *companion >= spec.out_dim)
            throw ContractError("invalid companion unit index");
        const Eigen::VectorXd z2 =
            (patches * W.row(*companion).transpose()).array() + net.bias(0)(*companion);
        const Eigen::VectorXd post = activation_eval({spec.activation, {}}, z);
        trace.columns = {"pre_unit", "pre_companion", "post_unit"};
        for (Eigen::Index i = 0; i < z.size(); ++i)
            trace.rows.push_back({z(i), z2(i), post(i)});
    }
    std::stable_sort(trace.rows.begin(), trace.rows.end(),
                     [](const auto& a, const auto& b) { return a[0] > b[0]; });
    return trace;
}

GrayImage atom_montage(const Dictionary& dict, int patch_side) {
    if (patch_side < 1 || static_cast<Eigen::Index>(patch_side) * patch_side != dict.dim())
        throw ContractError("atom dimensionality " + std::to_string(dict.dim()) +
                            " is not patch_side^2 = " + std::to_string(patch_side * patch_side));
    const PairOrdering order = greedy_pair_sort(dict);
    std::vector<int> tiles;
    tiles.reserve(static_cast<std::size_t>(dict.count()));
    for (const auto& p : order.pairs) {
        tiles.push_back(p.i);
        tiles.push_back(p.j);
    }
    if (order.leftover) tiles.push_back(*order.leftover);

    const auto T = static_cast<int>(tiles.size());
    // even tile-column count near sqrt(T), so pair members stay adjacent
    int cols = 2 * static_cast<int>(
                       std::ceil(std::ceil(std::sqrt(static_cast<double>(T))) / 2.0));
    cols = std::max(cols, 2);
    const int rows = (T + cols - 1) / cols;

    GrayImage img(rows * patch_side + (rows - 1), cols * patch_side + (cols - 1), 0.0);
    for (int idx = 0; idx < T; ++idx) {
        const int tr = idx / cols;
        const int tc = idx % cols;
        const int r0 = tr * (patch_side + 1);
        const int c0 = tc * (patch_side + 1);
        const Eigen::VectorXd atom = dict.atoms.col(tiles[static_cast<std::size_t>(idx)]);
        const double lo = atom.minCoeff();
        const double hi = atom.maxCoeff();
        const double range = hi - lo;
        for (int r = 0; r < patch_side; ++r)
            for (int c = 0; c < patch_side; ++c) {
                const double v = atom(static_cast<Eigen::Index>(r) * patch_side + c);
                img.at(r0 + r, c0 + c) = range == 0.0 ? 0.5 : (v - lo) / range;
            }
    }
    return img;
}

void write_histogram_csv(std::ostream& out, const std::vector<std::size_t>& counts,
                         double bin_width_degrees) {
    out << "bin_start_degrees,bin_end_degrees,count\n";
    out << std::setprecision(17);
    for (std::size_t b = 0; b < counts.size(); ++b)
        out << static_cast<double>(b) * bin_width_degrees << ","
            << static_cast<double>(b + 1) * bin_width_degrees << "," << counts[b] << "\n";
}

void write_trace_csv(std::ostream& out, const ActivationTrace& trace) {
    out << trace.columns[0] << "," << trace.columns[1] << "," << trace.columns[2] << "\n";
    out << std::setprecision(17);
    for (const auto& row : trace.rows) out << row[0] << "," << row[1] << "," << row[2] << "\n";
}

}  // namespace dprn
