// Integer-only inference simulation and exhaustive oracles: multiplier/shift
// requantization, the additive binary activation mask, the floor-error
// decomposition, and brute-force rounding search used as ground truth by the
// reconstruction tests.

#pragma once

#include "gptq/tensor.hpp"

#include <cstdint>
#include <vector>

namespace gptq {

struct RequantParams {
    int64_t multiplier = 1; // M < 2^31, odd unless shift == 0
    int shift = 0;          // e >= 0; realizes M * 2^-e
};

/// Smallest shift such that M * 2^-e is within 2^-30 relative error of
/// s_w * s_x / s_y with M < 2^31; exact for dyadic ratios. Rejects ratios
/// at or above 2^31.
RequantParams derive_requant(double s_w, double s_x, double s_y);

struct IntTensor {
    std::vector<int64_t> shape;
    std::vector<int64_t> data;

    IntTensor() = default;
    explicit IntTensor(std::vector<int64_t> s);
    IntTensor(std::vector<int64_t> s, std::vector<int64_t> d);
    int64_t numel() const { return static_cast<int64_t>(data.size()); }
    int64_t operator[](int64_t i) const { return data[static_cast<size_t>(i)]; }
    int64_t& operator[](int64_t i) { return data[static_cast<size_t>(i)]; }
};

/// Integer matmul + requantization: codes = clamp(rshift_round_half_up(
/// acc * M, e) + mask, out_bits symmetric range). W is (out, in), X is (in)
/// or (batch, in); mask (optional, binary) is shaped like the output.
/// Accumulators beyond 63 bits are rejected.
IntTensor integer_layer_forward(const IntTensor& w, const IntTensor& x, const RequantParams& rq,
                                const IntTensor* mask, int out_bits);

struct ErrorDecomposition {
    double term_w = 0.0;     // eps_w * floor(x)
    double term_x = 0.0;     // floor(w) * eps_x
    double term_cross = 0.0; // eps_w * eps_x
    double total = 0.0;      // w*x - floor(w)*floor(x)
};

ErrorDecomposition error_decomposition(double w, double x);

struct ErrorDecompositionT {
    Tensor term_w, term_x, term_cross, total;
};

ErrorDecompositionT error_decomposition(const Tensor& w, const Tensor& x);

struct OracleResult {
    std::vector<int64_t> choice;   // chosen candidate position per weight
    std::vector<double> levels;    // chosen level value per weight
    std::vector<int64_t> offsets;  // chosen index offset from the floor index
    double value = 0.0;            // sum(level_i * x_i)
    double abs_error = 0.0;        // |value - target|
    int64_t enumerated = 0;
};

/// Exhaustive search over per-weight candidate levels for the assignment
/// minimizing |sum(level_i * x_i) - target|. `floor_offsets[w][c]` is the
/// index offset of candidate c from that weight's floor level. Ties are
/// broken by the lexicographically smallest sorted-descending |offset|
/// profile (prefer many small moves over one large one), then by candidate
/// positions. Rejects searches beyond 10^6 assignments.
OracleResult exhaustive_rounding_oracle(const std::vector<std::vector<double>>& candidates,
                                        const std::vector<std::vector<int64_t>>& floor_offsets,
                                        const std::vector<double>& x, double target);

/// Convenience: candidates = floor level + the given integer offsets on a
/// per-weight grid of consecutive levels spaced `scale` apart (uniform case).
OracleResult oracle_uniform(const std::vector<double>& w, const std::vector<double>& x,
                            const std::vector<int64_t>& offsets, double scale, double target);

} // namespace gptq
