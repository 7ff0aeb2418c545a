#include "gptq/network.hpp"

#include <cmath>
#include <sstream>

namespace gptq {

const char* layer_kind_name(LayerKind k) {
    switch (k) {
    case LayerKind::linear: return "linear";
    case LayerKind::conv2d: return "conv2d";
    case LayerKind::relu: return "relu";
    case LayerKind::residual_add: return "residual_add";
    case LayerKind::global_avg_pool: return "global_avg_pool";
    case LayerKind::flatten: return "flatten";
    }
    return "?";
}

LayerKind layer_kind_from_string(const std::string& s) {
    if (s == "linear") return LayerKind::linear;
    if (s == "conv2d") return LayerKind::conv2d;
    if (s == "relu") return LayerKind::relu;
    if (s == "residual_add") return LayerKind::residual_add;
    if (s == "global_avg_pool") return LayerKind::global_avg_pool;
    if (s == "flatten") return LayerKind::flatten;
    throw Error("unknown layer kind: " + s);
}

std::pair<int, int> NetworkRecord::block_range(int b) const {
    int first = b == 0 ? 0 : block_ends[static_cast<size_t>(b - 1)];
    return {first, block_ends[static_cast<size_t>(b)]};
}

void NetworkRecord::validate() const {
    require(!layers.empty(), "network has no layers");
    require(!block_ends.empty(), "network has no block partition");
    int prev = 0;
    for (int e : block_ends) {
        require(e > prev, "block partition not strictly increasing");
        prev = e;
    }
    require(prev == num_layers(), "block partition does not cover all layers");
    for (int l = 0; l < num_layers(); l++) {
        const LayerRecord& lr = layers[static_cast<size_t>(l)];
        std::string where = "layer " + std::to_string(l);
        switch (lr.kind) {
        case LayerKind::linear:
            require(lr.has_weights() && lr.weights.rank() == 2, where + ": linear needs 2-d weights");
            if (lr.has_bias())
                require(lr.bias.rank() == 1 && lr.bias.shape[0] == lr.weights.shape[0],
                        where + ": bias shape mismatch");
            break;
        case LayerKind::conv2d:
            require(lr.has_weights() && lr.weights.rank() == 4, where + ": conv2d needs 4-d weights");
            require(lr.stride >= 1, where + ": conv stride must be >= 1");
            require(lr.padding >= 0, where + ": conv padding must be >= 0");
            if (lr.has_bias())
                require(lr.bias.rank() == 1 && lr.bias.shape[0] == lr.weights.shape[0],
                        where + ": bias shape mismatch");
            break;
        case LayerKind::residual_add:
            // backward-only references; -1 means the network input
            require(lr.skip_from >= -1 && lr.skip_from < l,
                    where + ": dangling residual reference " + std::to_string(lr.skip_from));
            require(!lr.has_weights(), where + ": residual_add carries no weights");
            break;
        default:
            require(!lr.has_weights(), where + ": parameter-free kind carries weights");
            break;
        }
    }
}

namespace {

std::string at_layer(int layer_index) {
    return layer_index < 0 ? std::string("layer ?") : "layer " + std::to_string(layer_index);
}

void check_finite(const Tensor& t, int layer_index, const char* what) {
    if (!t.all_finite())
        throw Error(at_layer(layer_index) + ": non-finite " + what);
}

Tensor apply_fused(const Tensor& pre, FusedAct act) {
    if (act == FusedAct::none) return pre;
    Tensor out = pre;
    for (double& v : out.data)
        if (v <= 0.0) v = 0.0;
    return out;
}

} // namespace

Tensor linear_forward(const Tensor& w, const Tensor* bias, const Tensor& x, int layer_index) {
    require(w.rank() == 2, at_layer(layer_index) + ": linear weights must be 2-d");
    int64_t out_f = w.shape[0], in_f = w.shape[1];
    bool single = x.rank() == 1;
    require(single ? x.shape[0] == in_f : (x.rank() == 2 && x.shape[1] == in_f),
            at_layer(layer_index) + ": linear input " + x.shape_str() + " does not match weights " +
                w.shape_str());
    int64_t batch = single ? 1 : x.shape[0];
    Tensor y(single ? std::vector<int64_t>{out_f} : std::vector<int64_t>{batch, out_f});
    for (int64_t b = 0; b < batch; b++) {
        const double* xr = x.data.data() + b * in_f;
        double* yr = y.data.data() + b * out_f;
        for (int64_t o = 0; o < out_f; o++) {
            const double* wr = w.data.data() + o * in_f;
            double acc = 0.0;
            for (int64_t i = 0; i < in_f; i++) acc += wr[i] * xr[i];
            yr[o] = acc + (bias && !bias->empty() ? (*bias)[o] : 0.0);
        }
    }
    return y;
}

Tensor conv2d_forward(const Tensor& w, const Tensor* bias, const Tensor& x, int stride,
                      int padding, int layer_index) {
    require(w.rank() == 4, at_layer(layer_index) + ": conv weights must be 4-d");
    require(x.rank() == 4, at_layer(layer_index) + ": conv input must be 4-d, got " + x.shape_str());
    int64_t co = w.shape[0], ci = w.shape[1], kh = w.shape[2], kw = w.shape[3];
    int64_t batch = x.shape[0], h = x.shape[2], wd = x.shape[3];
    require(x.shape[1] == ci, at_layer(layer_index) + ": conv input channels " + x.shape_str() +
                                  " do not match weights " + w.shape_str());
    int64_t oh = (h + 2 * padding - kh) / stride + 1;
    int64_t ow = (wd + 2 * padding - kw) / stride + 1;
    require(oh >= 1 && ow >= 1, at_layer(layer_index) + ": conv output collapses to zero size");
    Tensor y({batch, co, oh, ow});
    for (int64_t b = 0; b < batch; b++)
        for (int64_t o = 0; o < co; o++) {
            double bv = bias && !bias->empty() ? (*bias)[o] : 0.0;
            for (int64_t i = 0; i < oh; i++)
                for (int64_t j = 0; j < ow; j++) {
                    double acc = 0.0;
                    for (int64_t c = 0; c < ci; c++)
                        for (int64_t u = 0; u < kh; u++) {
                            int64_t yy = i * stride + u - padding;
                            if (yy < 0 || yy >= h) continue;
                            for (int64_t v = 0; v < kw; v++) {
                                int64_t xx = j * stride + v - padding;
                                if (xx < 0 || xx >= wd) continue;
                                acc += w.at4(o, c, u, v) * x.at4(b, c, yy, xx);
                            }
                        }
                    y.at4(b, o, i, j) = acc + bv;
                }
        }
    return y;
}

void linear_backward(const Tensor& w, const Tensor& x, const Tensor& gy, Tensor* gw, Tensor* gb,
                     Tensor* gx) {
    int64_t out_f = w.shape[0], in_f = w.shape[1];
    bool single = x.rank() == 1;
    int64_t batch = single ? 1 : x.shape[0];
    if (gw) *gw = Tensor(w.shape);
    if (gb) *gb = Tensor({out_f});
    if (gx) *gx = Tensor(x.shape);
    for (int64_t b = 0; b < batch; b++) {
        const double* xr = x.data.data() + b * in_f;
        const double* gr = gy.data.data() + b * out_f;
        for (int64_t o = 0; o < out_f; o++) {
            double g = gr[o];
            if (gb) (*gb)[o] += g;
            if (gw) {
                double* gwr = gw->data.data() + o * in_f;
                for (int64_t i = 0; i < in_f; i++) gwr[i] += g * xr[i];
            }
            if (gx) {
                const double* wr = w.data.data() + o * in_f;
                double* gxr = gx->data.data() + b * in_f;
                for (int64_t i = 0; i < in_f; i++) gxr[i] += g * wr[i];
            }
        }
    }
}

void conv2d_backward(const Tensor& w, const Tensor& x, const Tensor& gy, int stride, int padding,
                     Tensor* gw, Tensor* gb, Tensor* gx) {
    int64_t co = w.shape[0], ci = w.shape[1], kh = w.shape[2], kw = w.shape[3];
    int64_t batch = x.shape[0], h = x.shape[2], wd = x.shape[3];
    int64_t oh = gy.shape[2], ow = gy.shape[3];
    if (gw) *gw = Tensor(w.shape);
    if (gb) *gb = Tensor({co});
    if (gx) *gx = Tensor(x.shape);
    for (int64_t b = 0; b < batch; b++)
        for (int64_t o = 0; o < co; o++)
            for (int64_t i = 0; i < oh; i++)
                for (int64_t j = 0; j < ow; j++) {
                    double g = gy.at4(b, o, i, j);
                    if (g == 0.0) continue;
                    if (gb) (*gb)[o] += g;
                    for (int64_t c = 0; c < ci; c++)
                        for (int64_t u = 0; u < kh; u++) {
                            int64_t yy = i * stride + u - padding;
                            if (yy < 0 || yy >= h) continue;
                            for (int64_t v = 0; v < kw; v++) {
                                int64_t xx = j * stride + v - padding;
                                if (xx < 0 || xx >= wd) continue;
                                if (gw) gw->at4(o, c, u, v) += g * x.at4(b, c, yy, xx);
                                if (gx) gx->at4(b, c, yy, xx) += g * w.at4(o, c, u, v);
                            }
                        }
                }
}

namespace {

Tensor pool_forward(const Tensor& x, int layer_index) {
    require(x.rank() == 4, at_layer(layer_index) + ": global_avg_pool input must be 4-d");
    int64_t batch = x.shape[0], c = x.shape[1], h = x.shape[2], w = x.shape[3];
    Tensor y({batch, c});
    double inv = 1.0 / static_cast<double>(h * w);
    for (int64_t b = 0; b < batch; b++)
        for (int64_t ch = 0; ch < c; ch++) {
            double acc = 0.0;
            for (int64_t i = 0; i < h; i++)
                for (int64_t j = 0; j < w; j++) acc += x.at4(b, ch, i, j);
            y.at2(b, ch) = acc * inv;
        }
    return y;
}

Tensor flatten_forward(const Tensor& x, int layer_index) {
    require(x.rank() >= 2, at_layer(layer_index) + ": flatten needs a batch axis");
    int64_t batch = x.shape[0];
    Tensor y = x;
    y.shape = {batch, x.numel() / batch};
    return y;
}

} // namespace

Tensor layer_forward(const LayerRecord& layer, const Tensor& x, const Tensor* skip,
                     int layer_index) {
    Tensor pre;
    switch (layer.kind) {
    case LayerKind::linear:
        pre = linear_forward(layer.weights, &layer.bias, x, layer_index);
        break;
    case LayerKind::conv2d:
        pre = conv2d_forward(layer.weights, &layer.bias, x, layer.stride, layer.padding,
                             layer_index);
        break;
    case LayerKind::relu: {
        pre = x;
        for (double& v : pre.data)
            if (v <= 0.0) v = 0.0;
        return pre;
    }
    case LayerKind::residual_add: {
        require(skip != nullptr, at_layer(layer_index) + ": residual_add needs its skip operand");
        require(x.same_shape(*skip), at_layer(layer_index) + ": residual shapes differ: " +
                                         x.shape_str() + " vs " + skip->shape_str());
        pre = x;
        for (int64_t i = 0; i < pre.numel(); i++) pre[i] += (*skip)[i];
        break;
    }
    case LayerKind::global_avg_pool:
        pre = pool_forward(x, layer_index);
        break;
    case LayerKind::flatten:
        pre = flatten_forward(x, layer_index);
        break;
    }
    return apply_fused(pre, layer.activation);
}

Tensor network_forward(const NetworkRecord& net, const Tensor& x, ForwardTrace* trace) {
    net.validate();
    Tensor cur = x;
    std::vector<Tensor> outputs;
    outputs.reserve(net.layers.size());
    for (int l = 0; l < net.num_layers(); l++) {
        const LayerRecord& lr = net.layers[static_cast<size_t>(l)];
        const Tensor* skip = nullptr;
        if (lr.kind == LayerKind::residual_add)
            skip = lr.skip_from < 0 ? &x : &outputs[static_cast<size_t>(lr.skip_from)];
        Tensor in = cur;
        Tensor pre;
        switch (lr.kind) {
        case LayerKind::linear:
            pre = linear_forward(lr.weights, &lr.bias, in, l);
            break;
        case LayerKind::conv2d:
            pre = conv2d_forward(lr.weights, &lr.bias, in, lr.stride, lr.padding, l);
            break;
        case LayerKind::relu: {
            pre = in;
            for (double& v : pre.data)
                if (v <= 0.0) v = 0.0;
            break;
        }
        case LayerKind::residual_add: {
            require(in.same_shape(*skip), at_layer(l) + ": residual shapes differ");
            pre = in;
            for (int64_t i = 0; i < pre.numel(); i++) pre[i] += (*skip)[i];
            break;
        }
        case LayerKind::global_avg_pool:
            pre = pool_forward(in, l);
            break;
        case LayerKind::flatten:
            pre = flatten_forward(in, l);
            break;
        }
        check_finite(pre, l, "intermediate value");
        Tensor out = apply_fused(pre, lr.activation);
        if (trace) {
            trace->inputs.push_back(std::move(in));
            trace->pre_act.push_back(pre);
        }
        outputs.push_back(std::move(out));
        cur = outputs.back();
    }
    if (trace) trace->outputs = outputs;
    return cur;
}

Gradients network_backward(const NetworkRecord& net, const Tensor& x, const Tensor& seed_grad) {
    ForwardTrace tr;
    Tensor y = network_forward(net, x, &tr);
    require(seed_grad.same_shape(y), "seed gradient shape " + seed_grad.shape_str() +
                                         " does not match output " + y.shape_str());
    int L = net.num_layers();
    Gradients g;
    g.weight.resize(static_cast<size_t>(L));
    g.bias.resize(static_cast<size_t>(L));
    g.pre_act.resize(static_cast<size_t>(L));
    g.input = Tensor(x.shape);

    std::vector<Tensor> gout(static_cast<size_t>(L)); // grad w.r.t. each layer output
    gout[static_cast<size_t>(L - 1)] = seed_grad;
    auto route_to = [&](int target, const Tensor& grad) {
        // target < 0 routes to the network input
        Tensor& dst = target < 0 ? g.input : gout[static_cast<size_t>(target)];
        if (dst.empty()) dst = Tensor(grad.shape);
        require(dst.same_shape(grad), "gradient routing shape mismatch");
        for (int64_t i = 0; i < grad.numel(); i++) dst[i] += grad[i];
    };

    for (int l = L - 1; l >= 0; l--) {
        const LayerRecord& lr = net.layers[static_cast<size_t>(l)];
        Tensor go = gout[static_cast<size_t>(l)];
        if (go.empty()) go = Tensor(tr.outputs[static_cast<size_t>(l)].shape);
        check_finite(go, l, "gradient");
        // fused activation: relu subgradient at 0 is 0
        Tensor gpre = go;
        if (lr.activation == FusedAct::relu) {
            const Tensor& pre = tr.pre_act[static_cast<size_t>(l)];
            for (int64_t i = 0; i < gpre.numel(); i++)
                if (pre[i] <= 0.0) gpre[i] = 0.0;
        }
        g.pre_act[static_cast<size_t>(l)] = gpre;
        const Tensor& in = tr.inputs[static_cast<size_t>(l)];
        Tensor gin;
        switch (lr.kind) {
        case LayerKind::linear:
            linear_backward(lr.weights, in, gpre, &g.weight[static_cast<size_t>(l)],
                            lr.has_bias() ? &g.bias[static_cast<size_t>(l)] : nullptr, &gin);
            break;
        case LayerKind::conv2d:
            conv2d_backward(lr.weights, in, gpre, lr.stride, lr.padding,
                            &g.weight[static_cast<size_t>(l)],
                            lr.has_bias() ? &g.bias[static_cast<size_t>(l)] : nullptr, &gin);
            break;
        case LayerKind::relu: {
            gin = gpre;
            for (int64_t i = 0; i < gin.numel(); i++)
                if (in[i] <= 0.0) gin[i] = 0.0;
            break;
        }
        case LayerKind::residual_add:
            gin = gpre;
            route_to(lr.skip_from, gpre);
            break;
        case LayerKind::global_avg_pool: {
            int64_t batch = in.shape[0], c = in.shape[1], h = in.shape[2], w = in.shape[3];
            gin = Tensor(in.shape);
            double inv = 1.0 / static_cast<double>(h * w);
            for (int64_t b = 0; b < batch; b++)
                for (int64_t ch = 0; ch < c; ch++) {
                    double gv = gpre.at2(b, ch) * inv;
                    for (int64_t i = 0; i < h; i++)
                        for (int64_t j = 0; j < w; j++) gin.at4(b, ch, i, j) = gv;
                }
            break;
        }
        case LayerKind::flatten:
            gin = gpre;
            gin.shape = in.shape;
            break;
        }
        route_to(l - 1, gin);
    }
    return g;
}

} // namespace gptq
