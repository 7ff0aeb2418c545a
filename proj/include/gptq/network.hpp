// Sequential networks of small layers (linear, conv2d, relu, residual-add,
// global average pool, flatten) with exact reverse-mode gradients.
//
// Convention: linear/conv layers may carry a fused relu so a "layer" output
// already includes its nonlinearity; the un-activated value is kept as the
// pre-activation. Batched tensors put the batch on the leading axis.

#pragma once

#include "gptq/tensor.hpp"

#include <string>
#include <vector>

namespace gptq {

enum class LayerKind { linear, conv2d, relu, residual_add, global_avg_pool, flatten };
enum class FusedAct { none, relu };

const char* layer_kind_name(LayerKind k);
LayerKind layer_kind_from_string(const std::string& s);

struct LayerRecord {
    LayerKind kind = LayerKind::linear;
    Tensor weights; // linear: (out,in); conv2d: (out,in,kh,kw); empty otherwise
    Tensor bias;    // (out) or empty
    int stride = 1;
    int padding = 0;
    FusedAct activation = FusedAct::none;
    int skip_from = -1; // residual_add: source layer index, -1 = network input

    bool has_weights() const { return !weights.empty(); }
    bool has_bias() const { return !bias.empty(); }
    int64_t out_channels() const { return weights.shape[0]; }
};

struct NetworkRecord {
    std::vector<LayerRecord> layers;
    // Exclusive end index of each block; strictly increasing, back() == layers.size().
    std::vector<int> block_ends;
    std::vector<int64_t> input_shape; // one sample, no batch axis

    int num_layers() const { return static_cast<int>(layers.size()); }
    int num_blocks() const { return static_cast<int>(block_ends.size()); }
    // [first, last) layer range of block b
    std::pair<int, int> block_range(int b) const;
    void validate() const;
};

/// Forward pass of a single layer. `skip` supplies the second operand of a
/// residual_add. Rank-1 inputs to linear/relu are treated as one sample.
Tensor layer_forward(const LayerRecord& layer, const Tensor& x, const Tensor* skip = nullptr,
                     int layer_index = -1);

struct ForwardTrace {
    std::vector<Tensor> inputs;  // what each layer consumed
    std::vector<Tensor> pre_act; // output before fused activation
    std::vector<Tensor> outputs; // final per-layer output
};

Tensor network_forward(const NetworkRecord& net, const Tensor& x, ForwardTrace* trace = nullptr);

struct Gradients {
    std::vector<Tensor> weight;  // d<seed,F(x)>/dW per layer (empty where no weights)
    std::vector<Tensor> bias;    // per layer
    std::vector<Tensor> pre_act; // gradient w.r.t. each layer's pre-activation output
    Tensor input;                // gradient w.r.t. the network input
};

/// Exact reverse-mode gradients of <seed_grad, F(x)> for every parameter and
/// pre-activation. Rejects non-finite intermediates naming the layer.
Gradients network_backward(const NetworkRecord& net, const Tensor& x, const Tensor& seed_grad);

// ---- low-level kernels shared with the reconstruction engine ----

Tensor linear_forward(const Tensor& w, const Tensor* bias, const Tensor& x, int layer_index);
Tensor conv2d_forward(const Tensor& w, const Tensor* bias, const Tensor& x, int stride,
                      int padding, int layer_index);
// backward of y = op(w, x): given dL/dy, fill dL/dw, dL/dbias, dL/dx
void linear_backward(const Tensor& w, const Tensor& x, const Tensor& gy, Tensor* gw, Tensor* gb,
                     Tensor* gx);
void conv2d_backward(const Tensor& w, const Tensor& x, const Tensor& gy, int stride, int padding,
                     Tensor* gw, Tensor* gb, Tensor* gx);

} // namespace gptq
