#include <doctest.h>

#include <sstream>

#include "dprn/dictionary.hpp"
#include "support.hpp"

using namespace dprn;
using namespace dprn::testing;

namespace {

Dictionary dict_from(std::initializer_list<std::initializer_list<double>> cols) {
    const auto K = static_cast<Eigen::Index>(cols.size());
    const auto d = static_cast<Eigen::Index>(cols.begin()->size());
    Dictionary dict;
    dict.atoms.resize(d, K);
    Eigen::Index k = 0;
    for (const auto& col : cols) {
        Eigen::Index r = 0;
        for (double v : col) dict.atoms(r++, k) = v;
        ++k;
    }
    return dict;
}

// independent replay of the greedy recurrence, scanning the raw angle matrix
PairOrdering brute_force_pairs(const Dictionary& d) {
    const Eigen::MatrixXd A = angle_matrix(d);
    std::vector<bool> used(static_cast<std::size_t>(d.count()), false);
    PairOrdering out;
    for (;;) {
        int bi = -1, bj = -1;
        double best = -1.0;
        for (int i = 0; i < d.count(); ++i)
            for (int j = 0; j < d.count(); ++j) {
                if (i >= j || used[i] || used[j]) continue;
                if (A(i, j) > best) {
                    best = A(i, j);
                    bi = i;
                    bj = j;
                }
            }
        if (bi < 0) break;
        used[bi] = used[bj] = true;
        out.pairs.push_back({bi, bj, best});
    }
    for (int i = 0; i < d.count(); ++i)
        if (!used[i]) out.leftover = i;
    return out;
}

}  // namespace

TEST_CASE("angle matrix on hand-checked geometry") {
    const double s = 1.0 / std::sqrt(2.0);
    const Dictionary d = dict_from({{1, 0}, {s, s}, {-1, 0}, {0, 1}});
    const Eigen::MatrixXd A = angle_matrix(d);
    CHECK(A(0, 1) == doctest::Approx(45.0));
    CHECK(A(0, 2) == doctest::Approx(180.0));
    CHECK(A(0, 3) == doctest::Approx(90.0));
    CHECK(A(1, 0) == A(0, 1));
    CHECK(A.diagonal().cwiseAbs().maxCoeff() == 0.0);
    CHECK(A.minCoeff() >= 0.0);
    CHECK(A.maxCoeff() <= 180.0);
}

TEST_CASE("orthonormal atoms are mutually at 90 degrees") {
    Dictionary d;
    d.atoms = Eigen::MatrixXd::Identity(6, 6);
    const Eigen::MatrixXd A = angle_matrix(d);
    for (Eigen::Index i = 0; i < 6; ++i)
        for (Eigen::Index j = 0; j < 6; ++j)
            CHECK(A(i, j) == (i == j ? 0.0 : doctest::Approx(90.0)));
}

TEST_CASE("angles are invariant to positive atom rescaling") {
    Rng rng(31);
    Dictionary d;
    d.atoms = random_matrix(rng, 9, 7);
    Dictionary scaled = d;
    for (Eigen::Index k = 0; k < 7; ++k) scaled.atoms.col(k) *= 0.1 + 5.0 * rng.uniform();
    CHECK((angle_matrix(d) - angle_matrix(scaled)).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("zero-norm atoms are rejected") {
    Dictionary d;
    d.atoms = Eigen::MatrixXd::Zero(4, 2);
    d.atoms(0, 0) = 1.0;
    CHECK_THROWS_AS(angle_matrix(d), ContractError);
}

TEST_CASE("greedy pairing on constructed cases") {
    {
        const Dictionary d = dict_from({{1, 0}, {0, 1}});
        const PairOrdering p = greedy_pair_sort(d);
        REQUIRE(p.pairs.size() == 1);
        CHECK(p.pairs[0].i == 0);
        CHECK(p.pairs[0].j == 1);
        CHECK(!p.leftover.has_value());
    }
    {
        // angle(a, -a) = 180 beats angle(b, b') = 45
        const double s = 1.0 / std::sqrt(2.0);
        const Dictionary d = dict_from({{1, 0}, {-1, 0}, {0, 1}, {s, s}});
        const PairOrdering p = greedy_pair_sort(d);
        REQUIRE(p.pairs.size() == 2);
        CHECK(p.pairs[0].i == 0);
        CHECK(p.pairs[0].j == 1);
        CHECK(p.pairs[0].angle_degrees == doctest::Approx(180.0));
        CHECK(p.pairs[1].i == 2);
        CHECK(p.pairs[1].j == 3);
    }
}

TEST_CASE("greedy pairing matches the brute-force replay on random dictionaries") {
    Rng rng(37);
    for (int rep = 0; rep < 50; ++rep) {
        Dictionary d;
        d.atoms = random_matrix(rng, 5, 6 + static_cast<Eigen::Index>(rng.below(3)));
        const PairOrdering got = greedy_pair_sort(d);
        const PairOrdering want = brute_force_pairs(d);
        REQUIRE(got.pairs.size() == want.pairs.size());
        for (std::size_t k = 0; k < got.pairs.size(); ++k) {
            CHECK(got.pairs[k].i == want.pairs[k].i);
            CHECK(got.pairs[k].j == want.pairs[k].j);
        }
        CHECK(got.leftover == want.leftover);
        for (std::size_t k = 1; k < got.pairs.size(); ++k)
            CHECK(got.pairs[k].angle_degrees <= got.pairs[k - 1].angle_degrees);
    }
}

TEST_CASE("histogram totals and placement") {
    Dictionary d;
    d.atoms = Eigen::MatrixXd::Identity(8, 8);
    const auto counts = angle_histogram(d, 5.0);
    REQUIRE(counts.size() == 36);
    std::size_t total = 0;
    for (std::size_t b = 0; b < counts.size(); ++b) {
        total += counts[b];
        if (b != 18) CHECK(counts[b] == 0);  // all mass in [90, 95)
    }
    CHECK(total == 8 * 7 / 2);
    CHECK(counts[18] == 28);

    // angle of exactly 180 degrees lands in the last bin
    const Dictionary pair = dict_from({{1, 0}, {-1, 0}});
    CHECK(angle_histogram(pair, 5.0).back() == 1);

    CHECK_THROWS_AS(angle_histogram(d, 7.0), ContractError);
    CHECK_THROWS_AS(angle_histogram(d, 0.0), ContractError);
    CHECK(angle_histogram(d, 2.5).size() == 72);
}

TEST_CASE("reversed pair fraction") {
    const Dictionary rev = dict_from({{1, 0}, {-1, 0}});
    CHECK(reversed_pair_fraction(rev, 160.0) == 1.0);
    Dictionary ortho;
    ortho.atoms = Eigen::MatrixXd::Identity(6, 6);
    CHECK(reversed_pair_fraction(ortho, 150.0) == 0.0);
    CHECK_THROWS_AS(reversed_pair_fraction(rev, 90.0), ContractError);
    CHECK_THROWS_AS(reversed_pair_fraction(rev, 181.0), ContractError);
}

TEST_CASE("activation trace of a dual network") {
    Network net = Network::make_mlp(4, {3}, 4, Activation::DualPathway);
    Rng rng(41);
    net.weight(0) = random_matrix(rng, 3, 4);
    net.weight(1) = random_matrix(rng, 4, 3);
    net.thresholds(0) << 0.5, -0.25, 0.0;

    const Eigen::MatrixXd X = random_matrix(rng, 32, 4);
    const ActivationTrace tr = activation_trace(net, X, 0);
    REQUIRE(tr.rows.size() == 32);
    for (std::size_t i = 1; i < tr.rows.size(); ++i)
        CHECK(tr.rows[i][0] <= tr.rows[i - 1][0]);  // sorted descending
    for (const auto& row : tr.rows) {
        const double z = row[0] - 0.5;             // col1 = z + t
        CHECK(row[1] == doctest::Approx(-z + 0.5));  // companion mirror
        CHECK(row[2] ==
              doctest::Approx(std::max(0.0, z + 0.5) - std::max(0.0, -z + 0.5)));
    }

    // with c = 0, the companion trace of x equals the original trace of -x
    net.bias(0).setZero();
    Eigen::MatrixXd pairX(2, 4);
    pairX.row(0) = random_matrix(rng, 1, 4);
    pairX.row(1) = -pairX.row(0);
    const ActivationTrace tp = activation_trace(net, pairX, 1);
    CHECK(tp.rows[0][1] == doctest::Approx(tp.rows[1][0]));
    CHECK(tp.rows[0][0] == doctest::Approx(tp.rows[1][1]));

    // t = 0 makes the equivalent post-activation the raw pre-activation
    net.thresholds(0).setZero();
    const ActivationTrace t0 = activation_trace(net, X, 2);
    for (const auto& row : t0.rows) CHECK(row[2] == row[0]);

    CHECK_THROWS_AS(activation_trace(net, X, 99), ContractError);
}

TEST_CASE("activation trace of a plain network needs a companion") {
    Network net = Network::make_mlp(4, {4}, 4, Activation::Rectifier);
    initialize_parameters(net, 5);
    Rng rng(43);
    const Eigen::MatrixXd X = random_matrix(rng, 8, 4);
    CHECK_THROWS_AS(activation_trace(net, X, 0), ContractError);
    const ActivationTrace tr = activation_trace(net, X, 0, 2);
    REQUIRE(tr.rows.size() == 8);
    for (const auto& row : tr.rows) CHECK(row[2] == std::max(0.0, row[0]));
}

TEST_CASE("montage layout, normalization and inversion") {
    {
        // 2 atoms of 4 pixels: one row of two tiles plus a 1-px separator
        const Dictionary d = dict_from({{1, 2, 3, 4}, {-1, -2, -3, -4}});
        const GrayImage m = atom_montage(d, 2);
        CHECK(m.height == 2);
        CHECK(m.width == 5);
        CHECK(m.at(0, 2) == 0.0);  // separator column
        // second tile is the intensity-inverted first
        CHECK(m.at(0, 0) == doctest::Approx(1.0 - m.at(0, 3)));
        CHECK(m.at(1, 1) == doctest::Approx(1.0 - m.at(1, 4)));
    }
    {
        // constant atom renders mid-gray
        const Dictionary d = dict_from({{0.3, 0.3, 0.3, 0.3}, {0.0, 1.0, 0.0, 0.0}});
        const GrayImage m = atom_montage(d, 2);
        CHECK(m.at(0, 0) == 0.5);
        CHECK(m.at(1, 1) == 0.5);
    }
    {
        Rng rng(47);
        Dictionary d;
        d.atoms = random_matrix(rng, 9, 10);  // odd leftover handling: K even here
        const GrayImage m = atom_montage(d, 3);
        // 10 tiles on a 4-wide grid -> 3 rows: 4*3+3 wide, 3*3+2 tall
        CHECK(m.width == 15);
        CHECK(m.height == 11);
        CHECK_THROWS_AS(atom_montage(d, 4), ContractError);
    }
}

TEST_CASE("csv writers emit headers and rows") {
    std::ostringstream hist;
    write_histogram_csv(hist, {1, 2, 3}, 60.0);
    CHECK(hist.str().rfind("bin_start_degrees,bin_end_degrees,count\n", 0) == 0);
    std::ostringstream trace;
    ActivationTrace tr;
    tr.columns = {"a", "b", "c"};
    tr.rows.push_back({1.0, 2.0, 3.0});
    write_trace_csv(trace, tr);
    CHECK(trace.str() == "a,b,c\n1,2,3\n");
}
