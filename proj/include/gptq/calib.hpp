// Calibration sets and intermediate-feature augmentation. Generators are pure
// functions of (kind, n, seed, sample index), so sets are reproducible and
// train/test splits are disjoint by construction.

#pragma once

#include "gptq/rng.hpp"
#include "gptq/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace gptq {

enum class DataKind { train_split, test_split, shifted, cross_domain, white_noise };

const char* data_kind_name(DataKind k);
DataKind data_kind_from_string(const std::string& s);

struct CalibrationSet {
    DataKind kind = DataKind::train_split;
    uint64_t seed = 0;
    std::vector<int64_t> sample_shape;
    std::vector<Tensor> inputs;
    std::vector<int> labels;          // empty for unlabeled kinds
    std::vector<int64_t> sample_index; // global generator index per sample

    int64_t size() const { return static_cast<int64_t>(inputs.size()); }
    bool labeled() const { return !labels.empty(); }
    Tensor stacked() const;
    Tensor stacked(const std::vector<int64_t>& rows) const;
};

struct DatasetOptions {
    std::vector<int64_t> shape = {1, 8, 8};
    int classes = 3;
    double shift_magnitude = 0.4; // brightness/contrast range for `shifted`
};

CalibrationSet make_dataset(DataKind kind, int n, uint64_t seed, DatasetOptions opts = {});

enum class AugmentKind { none, dropout, mixup, cutout, noise };

const char* augment_kind_name(AugmentKind k);
AugmentKind augment_kind_from_string(const std::string& s);

/// Pinned default magnitude per kind: dropout 0.1, mixup 0.4 (Beta shape),
/// cutout 0.25 (side fraction), noise 0.05 (relative std).
double default_augment_magnitude(AugmentKind k);

/// Augment a batched feature tensor (leading batch axis). Magnitude 0 is the
/// identity for every kind; shapes are never changed.
Tensor augment_features(const Tensor& x, AugmentKind kind, double magnitude, Rng& rng);

// dataset directory persistence (same conventions as model persistence)
void save_dataset(const std::filesystem::path& dir, const CalibrationSet& set);
CalibrationSet load_dataset(const std::filesystem::path& dir);

} // namespace gptq
