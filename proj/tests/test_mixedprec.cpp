#include "gptq/mixedprec.hpp"

#include "gptq/rng.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

using namespace gptq;

namespace {

SensitivityStats stats_from(std::vector<double> g) {
    SensitivityStats s;
    s.g = std::move(g);
    for (size_t i = 0; i < s.g.size(); i++) s.neurons.push_back({0, static_cast<int>(i)});
    double mean = 0.0;
    for (double v : s.g) mean += v;
    mean /= static_cast<double>(s.g.size());
    double var = 0.0;
    for (double v : s.g) var += (v - mean) * (v - mean);
    var /= static_cast<double>(s.g.size());
    s.mu = mean;
    s.sigma = std::sqrt(var);
    return s;
}

NetworkRecord one_linear(const Tensor& w) {
    NetworkRecord net;
    LayerRecord l;
    l.kind = LayerKind::linear;
    l.weights = w;
    net.layers.push_back(std::move(l));
    net.block_ends = {1};
    net.input_shape = {w.shape[1]};
    return net;
}

} // namespace

TEST_SUITE("mixedprec") {

TEST_CASE("a dead output neuron has zero sensitivity") {
    Tensor w({3, 4}, {1, -2, 0.5, 1, 0, 0, 0, 0, 2, 1, -1, 0.5});
    NetworkRecord net = one_linear(w);
    DatasetOptions opts;
    opts.shape = {4};
    CalibrationSet calib = make_dataset(DataKind::train_split, 16, 3, opts);
    SensitivityStats stats = neuron_sensitivity(net, calib, {0});
    REQUIRE(stats.g.size() == 3);
    CHECK(stats.g[1] == 0.0);
    CHECK(stats.g[0] > 0.0);
}

TEST_CASE("duplicated rows have equal sensitivities") {
    Tensor w({2, 3}, {1, -2, 0.5, 1, -2, 0.5});
    NetworkRecord net = one_linear(w);
    DatasetOptions opts;
    opts.shape = {3};
    CalibrationSet calib = make_dataset(DataKind::train_split, 16, 5, opts);
    SensitivityStats stats = neuron_sensitivity(net, calib, {0});
    CHECK(stats.g[0] == stats.g[1]);
}

TEST_CASE("single-layer sensitivity matches the analytic expectation") {
    // objective ||Wx||^2 gives d/da_i = 2 a_i, so g_i = E[2 |row_i . x|]
    Rng rng(61, 0);
    Tensor w({3, 5});
    for (double& v : w.data) v = rng.next_gaussian();
    NetworkRecord net = one_linear(w);
    DatasetOptions opts;
    opts.shape = {5};
    CalibrationSet calib = make_dataset(DataKind::train_split, 64, 7, opts);
    SensitivityStats stats = neuron_sensitivity(net, calib, {0});
    for (int64_t o = 0; o < 3; o++) {
        double expect = 0.0;
        for (int64_t n = 0; n < calib.size(); n++) {
            double dot = 0.0;
            for (int64_t i = 0; i < 5; i++)
                dot += w.at2(o, i) * calib.inputs[static_cast<size_t>(n)][i];
            expect += std::fabs(2.0 * dot);
        }
        expect /= static_cast<double>(calib.size());
        CHECK(stats.g[static_cast<size_t>(o)] == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("truncation rounds toward zero") {
    SensitivityStats s = stats_from({0.0});
    s.g = {0.9, -0.9, 2.1};
    s.neurons = {{0, 0}, {0, 1}, {0, 2}};
    s.mu = 0.0;
    s.sigma = 1.0; // z equals g directly
    BitAllocation alloc = allocate_bits(s, 4);
    CHECK(alloc.bits[0] == 4); // trunc(0.9) = 0
    CHECK(alloc.bits[1] == 4); // trunc(-0.9) = 0
    CHECK(alloc.bits[2] == 6); // trunc(2.1) = 2
}

TEST_CASE("the three-neuron worked example") {
    SensitivityStats s = stats_from({1.0, 2.0, 3.0});
    CHECK(s.mu == doctest::Approx(2.0));
    CHECK(s.sigma == doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-12));
    BitAllocation alloc = allocate_bits(s, 4);
    CHECK(alloc.bits == std::vector<int>{3, 4, 5});
    BitAllocation norm = normalize_allocation(alloc, 4);
    CHECK(norm.bits == std::vector<int>{3, 4, 5}); // residual already zero
    CHECK(norm.mean_bits() == 4.0);
}

TEST_CASE("equal sensitivities collapse to the target width") {
    SensitivityStats s = stats_from({0.7, 0.7, 0.7, 0.7});
    BitAllocation alloc = allocate_bits(s, 5);
    for (int b : alloc.bits) CHECK(b == 5);
}

TEST_CASE("normalization increments the largest residue first") {
    BitAllocation alloc;
    alloc.target_bits = 4;
    alloc.neurons = {{0, 0}, {0, 1}, {0, 2}};
    alloc.bits = {3, 4, 4};
    alloc.z = {-1.1, 0.1, 0.3}; // fractional residues 0.9, 0.1, 0.3
    BitAllocation norm = normalize_allocation(alloc, 4);
    CHECK(norm.bits == std::vector<int>{4, 4, 4});
    CHECK(!norm.infeasible);
}

TEST_CASE("saturated clamps flag infeasibility and change nothing") {
    BitAllocation alloc;
    alloc.target_bits = 4;
    alloc.neurons = {{0, 0}, {0, 1}};
    alloc.bits = {8, 8};
    alloc.z = {9.0, 9.0};
    BitAllocation norm = normalize_allocation(alloc, 4);
    CHECK(norm.infeasible);
    CHECK(norm.bits == std::vector<int>{8, 8});
}

TEST_CASE("allocation properties on random sensitivities") {
    Rng rng(71, 0);
    for (int trial = 0; trial < 200; trial++) {
        int n = 4 + static_cast<int>(rng.next_below(60));
        std::vector<double> g(static_cast<size_t>(n));
        for (double& v : g) v = std::fabs(rng.next_gaussian());
        SensitivityStats s = stats_from(g);
        if (s.sigma < 1e-12) continue;
        BitAllocation alloc = normalize_allocation(allocate_bits(s, 5), 5);

        // monotone: larger sensitivity never gets fewer bits
        std::vector<int> order(static_cast<size_t>(n));
        for (int i = 0; i < n; i++) order[static_cast<size_t>(i)] = i;
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            return g[static_cast<size_t>(a)] < g[static_cast<size_t>(b)];
        });
        bool monotone = true;
        for (int i = 1; i < n; i++) {
            int prev = order[static_cast<size_t>(i - 1)], cur = order[static_cast<size_t>(i)];
            if (g[static_cast<size_t>(cur)] > g[static_cast<size_t>(prev)])
                monotone = monotone && alloc.bits[static_cast<size_t>(cur)] >=
                                           alloc.bits[static_cast<size_t>(prev)];
        }
        CHECK(monotone);

        // exact average when nothing saturates
        bool saturated = alloc.infeasible;
        for (int b : alloc.bits) saturated = saturated || b == kBitsFloor || b == kBitsCeil;
        if (!saturated) {
            int64_t sum = 0;
            for (int b : alloc.bits) sum += b;
            CHECK(sum == static_cast<int64_t>(n) * 5);
        }

        // scale invariance of the whole allocation
        std::vector<double> g2 = g;
        for (double& v : g2) v *= 37.5;
        SensitivityStats s2 = stats_from(g2);
        BitAllocation alloc2 = normalize_allocation(allocate_bits(s2, 5), 5);
        CHECK(alloc2.bits == alloc.bits);

        // permutation equivariance (reversal)
        std::vector<double> g3(g.rbegin(), g.rend());
        SensitivityStats s3 = stats_from(g3);
        BitAllocation alloc3 = normalize_allocation(allocate_bits(s3, 5), 5);
        for (int i = 0; i < n; i++)
            CHECK(alloc3.bits[static_cast<size_t>(i)] ==
                  alloc.bits[static_cast<size_t>(n - 1 - i)]);
    }
}

TEST_CASE("degenerate sigma assigns the target everywhere") {
    SensitivityStats s = stats_from({1.0, 1.0, 1.0});
    CHECK(s.sigma == 0.0);
    BitAllocation alloc = normalize_allocation(allocate_bits(s, 6), 6);
    for (int b : alloc.bits) CHECK(b == 6);
    CHECK(alloc.mean_bits() == 6.0);
}

TEST_CASE("allocation csv round-trips") {
    SensitivityStats s = stats_from({0.25, 1.5, 0.75});
    s.neurons = {{1, 0}, {1, 1}, {2, 0}};
    BitAllocation alloc = normalize_allocation(allocate_bits(s, 4), 4);
    alloc.neurons = s.neurons;
    std::filesystem::path f = std::filesystem::temp_directory_path() / "gptq_alloc_test.csv";
    write_allocation_csv(f, s, alloc);
    SensitivityStats s2;
    BitAllocation back = read_allocation_csv(f, &s2);
    CHECK(back.bits == alloc.bits);
    for (size_t i = 0; i < s.g.size(); i++) {
        CHECK(s2.g[i] == s.g[i]);
        CHECK(back.neurons[i].layer == alloc.neurons[i].layer);
        CHECK(back.neurons[i].channel == alloc.neurons[i].channel);
    }
    std::filesystem::remove(f);
}

TEST_CASE("per-layer export fills channels") {
    SensitivityStats s = stats_from({0.1, 0.9, 0.5, 0.4});
    s.neurons = {{1, 0}, {1, 1}, {3, 0}, {3, 1}};
    BitAllocation alloc = normalize_allocation(allocate_bits(s, 4), 4);
    alloc.neurons = s.neurons;
    std::vector<std::vector<int>> per = alloc.per_layer(5);
    CHECK(per[0].empty());
    CHECK(per[1].size() == 2);
    CHECK(per[3].size() == 2);
    CHECK(per[1][0] == alloc.bits[0]);
    CHECK(per[3][1] == alloc.bits[3]);
}

} // TEST_SUITE
