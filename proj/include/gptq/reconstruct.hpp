// The learned-rounding core: per-layer / per-block minimization of the
// reconstruction error over learnable rounding offsets, with pluggable loss,
// weight masks, rounding domain, bias perturbation and feature augmentation.
//
// Scheduling runs first-to-last; every unit sees inputs produced by the
// already-quantized prefix and is trained against the full-precision block
// applied to those same inputs. A unit can never end up worse than nearest
// rounding: the hardened result falls back to it when the final full-set l2
// does not improve on it.

#pragma once

#include "gptq/calib.hpp"
#include "gptq/codec.hpp"
#include "gptq/network.hpp"
#include "gptq/optim.hpp"

#include <optional>
#include <string>
#include <vector>

namespace gptq {

// ---- losses ----

enum class LossKind { l1, l2, cosine, kl };

const char* loss_kind_name(LossKind k);
LossKind loss_kind_from_string(const std::string& s);

double reconstruction_loss(const Tensor& y, const Tensor& yhat, LossKind kind);
/// dL/dyhat for the same reduction.
Tensor reconstruction_loss_grad(const Tensor& y, const Tensor& yhat, LossKind kind);

// ---- learnable rounding variable ----

enum class EpsDomain { unit, real_line };

const char* eps_domain_name(EpsDomain d);
EpsDomain eps_domain_from_string(const std::string& s); // unit|real

/// Rectified-sigmoid constants for the unit domain.
constexpr double kRectGamma = -0.1;
constexpr double kRectZeta = 1.1;

struct RoundingVar {
    EpsDomain domain = EpsDomain::unit;
    Tensor raw;         // learnable, shaped like the weights
    Tensor floor_index; // unit domain: frozen floor of the init grid index
    double beta = 50.0;
    int boundary_inits = 0; // weights that started exactly on a grid level
};

/// Effective epsilon of the unit domain: clip(sigmoid(raw)*(zeta-gamma)+gamma, 0, 1).
double rectified_sigmoid(double raw);
double rectified_sigmoid_deriv(double raw);

/// Initialize so that decoding the state reproduces the weights exactly:
/// unit: rectified sigmoid hits frac(to_index(w)); real: raw = to_index(w).
RoundingVar init_epsilon(const Tensor& w, const QuantParams& params,
                         const std::vector<Grid>& grids, EpsDomain domain, double beta);

enum class Phase { train, eval };

/// Train: unit decodes floor+eps, real decodes soft_round(raw, beta).
/// Eval: unit thresholds eps at 0.5, real rounds raw; outputs are grid members.
Tensor effective_weight(const QuantParams& params, const std::vector<Grid>& grids,
                        const RoundingVar& var, Phase phase);

/// Elementwise d(effective train weight)/d(raw).
Tensor effective_weight_grad_factor(const QuantParams& params, const std::vector<Grid>& grids,
                                    const RoundingVar& var);

/// Plain decode of the learnable state (no rounding): the quantity that must
/// reproduce W at initialization for every scheme and domain.
Tensor dequantize_state(const QuantParams& params, const std::vector<Grid>& grids,
                        const RoundingVar& var);

std::vector<Grid> build_grids(const QuantParams& params, int64_t channels);

// ---- masks ----

enum class MaskStrategy { none, ambiguity_most, ambiguity_least, magnitude_low, magnitude_high };

const char* mask_strategy_name(MaskStrategy s);
MaskStrategy mask_strategy_from_string(const std::string& s);

struct MaskSpec {
    MaskStrategy strategy = MaskStrategy::none;
    double fraction = 1.0; // of entries kept trainable
};

/// Binary mask with exactly ceil(fraction * numel) trainable entries (ties by
/// flat index). Ambiguity scores |idx - round(idx)|, magnitude scores |w|.
Tensor build_mask(const Tensor& w, const QuantParams& params, const std::vector<Grid>& grids,
                  const MaskSpec& spec);

// ---- learnable bias perturbation ----

struct BiasPerturbation {
    double alpha = 0.0;
    Tensor raw; // r; eps_b = alpha*|b| * (2*sigmoid(r) - 1)
    Tensor box; // alpha*|b| per element

    bool enabled() const { return alpha > 0.0 && !raw.empty(); }
    Tensor value() const;
    Tensor value_grad_factor() const; // d eps_b / d r
};

BiasPerturbation make_bias_perturbation(const Tensor& bias, double alpha);

// ---- configuration ----

enum class Granularity { layer, block };

const char* granularity_name(Granularity g);
Granularity granularity_from_string(const std::string& s);

struct GptqConfig {
    LossKind loss = LossKind::l2;
    Granularity granularity = Granularity::layer;
    int iterations = 10000;
    int batch_size = 32;
    int calib_size = 1024;
    OptKind optimizer = OptKind::adam;
    Scheme scheme = Scheme::uniform;
    int bits = 4;
    int act_bits = 8;
    double power_exponent = 2.0;
    EpsDomain domain = EpsDomain::unit;
    double beta = 0.0; // 0 = per-scheme default
    MaskSpec mask{};
    double bias_alpha = 0.0;
    AugmentKind augment = AugmentKind::none;
    double augment_magnitude = -1.0; // negative = per-kind default
    uint64_t seed = 1;

    double resolved_beta() const { return beta > 0.0 ? beta : default_beta(scheme); }
    double resolved_augment_magnitude() const {
        return augment_magnitude >= 0.0 ? augment_magnitude : default_augment_magnitude(augment);
    }
};

// ---- per-unit optimization ----

struct UnitLayerState {
    int layer_index = -1;
    bool quantize = false; // carries weights and learns rounding
    QuantParams params;
    std::vector<Grid> grids;
    RoundingVar rounding;
    Tensor mask;
    Tensor bias_current; // original bias, later perturbed/corrected
    BiasPerturbation bias_pert;
    int act_bits = 0; // input activation quantization (weighted layers)
    double act_scale = 1.0;
    bool act_scale_fallback = false;
    Grid act_grid;
};

struct UnitTracePoint {
    int64_t step;
    double train_loss;
    double val_loss;
};

struct UnitResult {
    std::vector<UnitTracePoint> trace;
    double nearest_l2 = 0.0;
    double final_l2 = 0.0;
    bool fell_back = false;
    bool aborted = false;
    std::string diagnostic;
};

struct UnitContext {
    const NetworkRecord* net = nullptr;
    int first_layer = 0, last_layer = 0; // [first, last)
    std::vector<UnitLayerState> states;
    const Tensor* unit_input = nullptr;               // stacked, full calibration set
    const std::vector<Tensor>* prefix_outputs = nullptr; // finalized per-layer outputs
    const Tensor* network_input = nullptr;            // stacked original inputs
};

enum class UnitMode { fp_reference, train, eval };

/// Forward a batch through the unit. `rows` selects the same rows in any
/// side inputs referenced by residual layers.
Tensor unit_forward(const UnitContext& ctx, const Tensor& x_batch,
                    const std::vector<int64_t>& rows, UnitMode mode);

/// Optimize the unit's rounding variables (and bias perturbations when alpha
/// is positive). Mutates ctx states to their hardened-best values.
UnitResult optimize_unit(UnitContext& ctx, const Tensor& y_fp_full, const GptqConfig& cfg,
                         int unit_counter);

/// Train-phase forward + backward in one call: returns the loss and fills
/// each state's d(loss)/d(rounding raw) and, when enabled, the bias
/// perturbation gradients.
double unit_loss_and_grads(const UnitContext& ctx, const Tensor& x_batch,
                           const std::vector<int64_t>& rows, const Tensor& y_ref, LossKind kind,
                           std::vector<Tensor>* raw_grads, std::vector<Tensor>* bias_raw_grads);

/// Standalone context over net layers [first, last): scales, grids, rounding
/// init, masks and activation grids resolved from cfg with no first/last
/// pinning. `input` must outlive the context.
UnitContext make_unit_context(const NetworkRecord& net, int first, int last, const Tensor& input,
                              const GptqConfig& cfg);

/// Per-neuron bias update restoring the pre-activation mean: returns
/// q_layer.bias + mean(pre_fp) - mean(pre_q) over the calibration inputs.
Tensor bias_corrected(const LayerRecord& fp_layer, const LayerRecord& q_layer, const Tensor& x);

// ---- whole-network pipeline ----

struct UnitReport {
    int unit_index = 0;
    std::vector<int> layer_indices;
    bool has_weights = false;
    UnitResult result;
    double wall_seconds = 0.0;
};

struct QuantizeReport {
    std::vector<UnitReport> units;
    bool scale_fallback = false;
    int boundary_inits = 0;
};

struct QuantizedNetwork {
    NetworkRecord net;
    std::vector<LayerQuantMeta> meta;
};

class BitAllocation; // mixedprec

/// Full first-to-last quantization schedule. First and last weighted layers
/// are pinned to 8 bits (weights and input activations); `channel_bits`
/// optionally assigns per-neuron widths to the remaining weighted layers.
QuantizedNetwork quantize_network(const NetworkRecord& net, const CalibrationSet& calib,
                                  const GptqConfig& cfg,
                                  const std::vector<std::vector<int>>* channel_bits = nullptr,
                                  QuantizeReport* report = nullptr);

/// Simulated quantized inference of a saved quantized model.
Tensor quantized_network_forward(const NetworkRecord& qnet,
                                 const std::vector<LayerQuantMeta>& meta, const Tensor& x);
double quantized_top1_accuracy(const NetworkRecord& qnet, const std::vector<LayerQuantMeta>& meta,
                               const CalibrationSet& dataset);

/// Weighted layers in schedule order plus the first/last pinned indices.
std::vector<int> weighted_layers(const NetworkRecord& net);

} // namespace gptq
