#include "gptq/calib.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <set>

using namespace gptq;

TEST_SUITE("calib") {

TEST_CASE("white noise is reproducible byte for byte") {
    CalibrationSet a = make_dataset(DataKind::white_noise, 16, 77);
    CalibrationSet b = make_dataset(DataKind::white_noise, 16, 77);
    REQUIRE(a.size() == b.size());
    for (int64_t i = 0; i < a.size(); i++)
        for (int64_t j = 0; j < a.inputs[static_cast<size_t>(i)].numel(); j++)
            CHECK(a.inputs[static_cast<size_t>(i)][j] == b.inputs[static_cast<size_t>(i)][j]);
    CHECK(!a.labeled());
}

TEST_CASE("zero-magnitude shift equals the base draw") {
    DatasetOptions opts;
    opts.shift_magnitude = 0.0;
    CalibrationSet shifted = make_dataset(DataKind::shifted, 12, 5, opts);
    CalibrationSet base = make_dataset(DataKind::train_split, 12, 5);
    for (int64_t i = 0; i < shifted.size(); i++)
        for (int64_t j = 0; j < shifted.inputs[static_cast<size_t>(i)].numel(); j++)
            CHECK(shifted.inputs[static_cast<size_t>(i)][j] ==
                  base.inputs[static_cast<size_t>(i)][j]);
}

TEST_CASE("nonzero shift changes the draw") {
    CalibrationSet shifted = make_dataset(DataKind::shifted, 4, 5);
    CalibrationSet base = make_dataset(DataKind::train_split, 4, 5);
    bool differs = false;
    for (int64_t j = 0; j < shifted.inputs[0].numel(); j++)
        differs = differs || shifted.inputs[0][j] != base.inputs[0][j];
    CHECK(differs);
}

TEST_CASE("train and test splits are disjoint by index") {
    CalibrationSet train = make_dataset(DataKind::train_split, 64, 3);
    CalibrationSet test = make_dataset(DataKind::test_split, 64, 3);
    std::set<int64_t> seen(train.sample_index.begin(), train.sample_index.end());
    for (int64_t idx : test.sample_index) CHECK(seen.count(idx) == 0);
}

TEST_CASE("labels are balanced round-robin") {
    DatasetOptions opts;
    opts.classes = 2;
    CalibrationSet set = make_dataset(DataKind::train_split, 10, 1, opts);
    int c0 = 0;
    for (int l : set.labels) c0 += l == 0 ? 1 : 0;
    CHECK(c0 == 5);
}

TEST_CASE("empty datasets are rejected") {
    CHECK_THROWS(make_dataset(DataKind::train_split, 0, 1));
}

TEST_CASE("cross-domain stripes differ structurally from blobs") {
    CalibrationSet stripes = make_dataset(DataKind::cross_domain, 4, 3);
    CalibrationSet blobs = make_dataset(DataKind::train_split, 4, 3);
    CHECK(stripes.labeled());
    bool differs = false;
    for (int64_t j = 0; j < stripes.inputs[0].numel(); j++)
        differs = differs || stripes.inputs[0][j] != blobs.inputs[0][j];
    CHECK(differs);
}

TEST_CASE("zero magnitude is the identity for every augmentation") {
    CalibrationSet set = make_dataset(DataKind::train_split, 8, 2);
    Tensor x = set.stacked();
    for (AugmentKind k :
         {AugmentKind::dropout, AugmentKind::mixup, AugmentKind::cutout, AugmentKind::noise}) {
        Rng rng(1, 2);
        Tensor y = augment_features(x, k, 0.0, rng);
        REQUIRE(y.shape == x.shape);
        for (int64_t i = 0; i < x.numel(); i++) CHECK(y[i] == x[i]);
    }
}

TEST_CASE("augmentations never change the shape") {
    CalibrationSet set = make_dataset(DataKind::train_split, 8, 2);
    Tensor x = set.stacked();
    for (AugmentKind k :
         {AugmentKind::dropout, AugmentKind::mixup, AugmentKind::cutout, AugmentKind::noise}) {
        Rng rng(1, 3);
        Tensor y = augment_features(x, k, default_augment_magnitude(k), rng);
        CHECK(y.shape == x.shape);
    }
}

TEST_CASE("inverted dropout preserves the mean") {
    Tensor x({64, 32});
    for (int64_t i = 0; i < x.numel(); i++) x[i] = 1.0;
    Rng rng(9, 0);
    double acc = 0.0;
    int64_t count = 0;
    for (int rep = 0; rep < 40; rep++) {
        Tensor y = augment_features(x, AugmentKind::dropout, 0.5, rng);
        for (int64_t i = 0; i < y.numel(); i++) acc += y[i];
        count += y.numel();
    }
    CHECK(acc / static_cast<double>(count) == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("dropout rate one is rejected") {
    Tensor x({2, 4});
    Rng rng(1, 1);
    CHECK_THROWS(augment_features(x, AugmentKind::dropout, 1.0, rng));
}

TEST_CASE("cutout zeroes exactly one square per sample") {
    Tensor x({2, 1, 8, 8});
    for (int64_t i = 0; i < x.numel(); i++) x[i] = 1.0; // strictly positive
    Rng rng(4, 0);
    Tensor y = augment_features(x, AugmentKind::cutout, 0.25, rng);
    int64_t side = 2; // round(0.25 * 8)
    for (int64_t b = 0; b < 2; b++) {
        int64_t zeros = 0;
        int64_t min_i = 8, max_i = -1, min_j = 8, max_j = -1;
        for (int64_t i = 0; i < 8; i++)
            for (int64_t j = 0; j < 8; j++) {
                double v = y.at4(b, 0, i, j);
                CHECK((v == 0.0 || v == 1.0));
                if (v == 0.0) {
                    zeros++;
                    min_i = std::min(min_i, i);
                    max_i = std::max(max_i, i);
                    min_j = std::min(min_j, j);
                    max_j = std::max(max_j, j);
                }
            }
        CHECK(zeros == side * side);
        CHECK(max_i - min_i + 1 == side);
        CHECK(max_j - min_j + 1 == side);
    }
}

TEST_CASE("mixup draws one convex combination per batch") {
    Tensor x({4, 3});
    for (int64_t i = 0; i < x.numel(); i++) x[i] = static_cast<double>(i);
    Rng rng(8, 0);
    Tensor y = augment_features(x, AugmentKind::mixup, 0.4, rng);
    // every output row must be a convex combination of two input rows
    for (int64_t b = 0; b < 4; b++) {
        bool ok = false;
        for (int64_t p = 0; p < 4 && !ok; p++) {
            // solve lambda from the first feature, verify on the rest
            double denom = x.at2(b, 0) - x.at2(p, 0);
            double lam = denom == 0.0 ? 1.0 : (y.at2(b, 0) - x.at2(p, 0)) / denom;
            if (lam < -1e-9 || lam > 1.0 + 1e-9) continue;
            bool match = true;
            for (int64_t f = 0; f < 3; f++)
                match = match && std::fabs(lam * x.at2(b, f) + (1.0 - lam) * x.at2(p, f) -
                                           y.at2(b, f)) < 1e-9;
            ok = match;
        }
        CHECK(ok);
    }
}

TEST_CASE("dataset directories round-trip") {
    CalibrationSet set = make_dataset(DataKind::train_split, 6, 42);
    std::filesystem::path dir = std::filesystem::temp_directory_path() / "gptq_ds_test";
    std::filesystem::remove_all(dir);
    save_dataset(dir, set);
    CalibrationSet back = load_dataset(dir);
    CHECK(back.kind == set.kind);
    CHECK(back.seed == set.seed);
    CHECK(back.sample_shape == set.sample_shape);
    REQUIRE(back.size() == set.size());
    for (int64_t i = 0; i < set.size(); i++) {
        CHECK(back.labels[static_cast<size_t>(i)] == set.labels[static_cast<size_t>(i)]);
        for (int64_t j = 0; j < set.inputs[static_cast<size_t>(i)].numel(); j++)
            CHECK(back.inputs[static_cast<size_t>(i)][j] == set.inputs[static_cast<size_t>(i)][j]);
    }
    std::filesystem::remove_all(dir);
}

} // TEST_SUITE
