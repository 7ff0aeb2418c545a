// Gradient-statistics mixed precision: per-neuron sensitivities from the
// squared output norm, z-scored truncate-toward-zero bit assignment around a
// target average, and an exact-average normalization pass.

#pragma once

#include "gptq/calib.hpp"
#include "gptq/network.hpp"

#include <filesystem>
#include <vector>

namespace gptq {

struct NeuronRef {
    int layer = 0;   // layer index in the network
    int channel = 0; // output neuron / channel within the layer
};

struct SensitivityStats {
    std::vector<NeuronRef> neurons; // concatenated network-wide
    std::vector<double> g;          // non-negative sensitivities
    double mu = 0.0;                // global mean
    double sigma = 0.0;             // global population standard deviation
};

/// Back-propagates the squared norm of the model outputs and averages the
/// absolute pre-activation gradients per neuron over the calibration set.
/// `layer_indices` selects the participating (quantized, non-pinned) layers.
SensitivityStats neuron_sensitivity(const NetworkRecord& net, const CalibrationSet& calib,
                                    const std::vector<int>& layer_indices);

struct BitAllocation {
    int target_bits = 4;
    std::vector<NeuronRef> neurons;
    std::vector<int> bits;
    std::vector<double> z; // z-scores kept for the normalization residues
    bool infeasible = false;

    double mean_bits() const;
    /// bits per channel, exported per layer for the quantization pipeline
    std::vector<std::vector<int>> per_layer(int num_layers) const;
};

constexpr int kBitsFloor = 2;
constexpr int kBitsCeil = 8;

/// b_i = b + trunc_toward_zero((g_i - mu) / sigma), clamped to [2, 8]. A
/// degenerate sigma assigns the target everywhere.
BitAllocation allocate_bits(const SensitivityStats& stats, int target_bits);

/// Adjust +-1 in residue order until the average is exactly the target (when
/// the clamps allow it; otherwise flags infeasible at the closest point).
BitAllocation normalize_allocation(BitAllocation alloc, int target_bits);

void write_allocation_csv(const std::filesystem::path& file, const SensitivityStats& stats,
                          const BitAllocation& alloc);
BitAllocation read_allocation_csv(const std::filesystem::path& file, SensitivityStats* stats);

} // namespace gptq
