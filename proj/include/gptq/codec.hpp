// Quantization codecs. Every scheme (uniform, log, float, power) is exposed
// through one continuous grid-index abstraction: a strictly increasing level
// set per channel, a piecewise-linear index coordinate over it, and hard or
// soft rounding performed in index space. This is what lets the learned
// rounding machinery treat non-uniform codebooks exactly like uniform ones.

#pragma once

#include "gptq/tensor.hpp"

#include <string>
#include <vector>

namespace gptq {

enum class Scheme { uniform, logarithmic, floatgrid, power };

const char* scheme_name(Scheme s);
Scheme scheme_from_string(const std::string& s); // uniform|log|float|power

struct FloatLayout {
    int exponent_bits = 2;
    int mantissa_bits = 1;
};

/// Layout used for a float grid of `bits` total bits (1 sign + e + m).
/// Four bits gives E2M1; the exponent field is capped at 2.
FloatLayout default_float_layout(int bits);

struct QuantParams {
    Scheme scheme = Scheme::uniform;
    int bits = 8;
    std::vector<int> channel_bits;     // per-channel override (mixed precision)
    std::vector<double> weight_scales; // one per output channel
    double power_exponent = 2.0;
    FloatLayout float_layout{};
    bool float_layout_set = false; // else derived from bits_for(channel)
    bool scale_fallback = false;   // some all-zero channel fell back to s = 1

    int bits_for(int64_t channel) const {
        return channel_bits.empty() ? bits : channel_bits[static_cast<size_t>(channel)];
    }
};

struct Grid {
    std::vector<double> levels; // strictly increasing, contains 0
    int64_t zero_index = 0;     // position of the 0 level

    int64_t count() const { return static_cast<int64_t>(levels.size()); }
    double min_level() const { return levels.front(); }
    double max_level() const { return levels.back(); }
    bool contains(double v) const; // exact set membership
};

/// Largest representable magnitude of a scheme at scale 1 (used to align
/// scales so the top grid level hits the channel max-abs).
double grid_max_unscaled(Scheme scheme, int bits, double power_exponent, FloatLayout layout);

/// Symmetric max-abs scales per output channel (axis 0). All-zero channels
/// fall back to s = 1 and set the fallback flag.
void compute_scales(QuantParams& params, const Tensor& w);

/// Per-tensor activation scale (uniform scheme): maxabs / (2^(b-1) - 1),
/// with the same s = 1 fallback for an all-zero tensor.
double compute_act_scale(double maxabs, int bits, bool* fallback = nullptr);

Grid build_grid(const QuantParams& params, int64_t channel);
Grid build_uniform_grid(int bits, double scale);

/// Continuous piecewise-linear grid coordinate. to_index(levels[k]) == k,
/// linear in between, clamped beyond the ends.
double to_index(const Grid& g, double x);
double from_index(const Grid& g, double k);
/// Local slope of from_index (level gap of the segment containing k).
/// Zero strictly beyond the grid ends.
double from_index_deriv(const Grid& g, double k);

/// Index-space nearest rounding with ties broken away from the zero level,
/// clamped to the grid.
double hard_round_index(const Grid& g, double k);

/// Differentiable rounding surrogate, exact at integers, strictly increasing,
/// converging to round-half-up as beta grows: floor(k) plus a tanh step of
/// steepness 2*beta across the fractional cell.
double soft_round(double k, double beta);
double soft_round_deriv(double k, double beta);

double quantize_dequantize(const Grid& g, double x);                   // hard
double quantize_dequantize_soft(const Grid& g, double x, double beta); // soft

double default_beta(Scheme s); // 20 power, 30 float, 50 log, 50 fallback

/// Textual grid dump for debugging: one level per line.
std::string dump_grid(const Grid& g);

/// Per-layer quantization metadata carried next to a quantized network.
struct LayerQuantMeta {
    bool quantized = false;
    Scheme scheme = Scheme::uniform;
    std::vector<int> wbits;        // per output channel
    std::vector<double> wscales;   // per output channel
    double power_exponent = 2.0;
    FloatLayout float_layout{};
    int act_bits = 0;              // 0 = input not quantized
    double act_scale = 1.0;
};

} // namespace gptq
