#include "gptq/reconstruct.hpp"

#include "gptq/rng.hpp"

#include <algorithm>
#include <cassert>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

namespace gptq {

// ---------------------------------------------------------------------------
// losses
// ---------------------------------------------------------------------------

const char* loss_kind_name(LossKind k) {
    switch (k) {
    case LossKind::l1: return "l1";
    case LossKind::l2: return "l2";
    case LossKind::cosine: return "cosine";
    case LossKind::kl: return "kl";
    }
    return "?";
}

LossKind loss_kind_from_string(const std::string& s) {
    if (s == "l1") return LossKind::l1;
    if (s == "l2") return LossKind::l2;
    if (s == "cosine") return LossKind::cosine;
    if (s == "kl") return LossKind::kl;
    throw Error("unknown loss '" + s + "' (expected l1|l2|cosine|kl)");
}

namespace {

constexpr double kCosineNormFloor = 1e-12;

void softmax_row(const double* in, double* out, int64_t n) {
    double mx = in[0];
    for (int64_t i = 1; i < n; i++) mx = std::max(mx, in[i]);
    double z = 0.0;
    for (int64_t i = 0; i < n; i++) {
        out[i] = std::exp(in[i] - mx);
        z += out[i];
    }
    for (int64_t i = 0; i < n; i++) out[i] /= z;
}

} // namespace

double reconstruction_loss(const Tensor& y, const Tensor& yhat, LossKind kind) {
    require(y.same_shape(yhat), "reconstruction_loss: shapes differ");
    int64_t n = y.numel();
    switch (kind) {
    case LossKind::l2: {
        double acc = 0.0;
        for (int64_t i = 0; i < n; i++) {
            double d = yhat[i] - y[i];
            acc += d * d;
        }
        return acc / static_cast<double>(n);
    }
    case LossKind::l1: {
        double acc = 0.0;
        for (int64_t i = 0; i < n; i++) acc += std::fabs(yhat[i] - y[i]);
        return acc / static_cast<double>(n);
    }
    case LossKind::cosine: {
        int64_t batch = y.shape[0], per = n / y.shape[0];
        double acc = 0.0;
        for (int64_t b = 0; b < batch; b++) {
            const double* yr = y.data.data() + b * per;
            const double* hr = yhat.data.data() + b * per;
            double ny = 0.0, nh = 0.0, dot = 0.0;
            for (int64_t i = 0; i < per; i++) {
                ny += yr[i] * yr[i];
                nh += hr[i] * hr[i];
                dot += yr[i] * hr[i];
            }
            ny = std::sqrt(ny);
            nh = std::sqrt(nh);
            if (ny < kCosineNormFloor || nh < kCosineNormFloor) continue;
            acc += 1.0 - dot / (ny * nh);
        }
        return acc / static_cast<double>(batch);
    }
    case LossKind::kl: {
        int64_t batch = y.shape[0], per = n / y.shape[0];
        std::vector<double> p(static_cast<size_t>(per)), q(static_cast<size_t>(per));
        double acc = 0.0;
        for (int64_t b = 0; b < batch; b++) {
            softmax_row(y.data.data() + b * per, p.data(), per);
            softmax_row(yhat.data.data() + b * per, q.data(), per);
            for (int64_t i = 0; i < per; i++)
                acc += p[static_cast<size_t>(i)] *
                       (std::log(p[static_cast<size_t>(i)]) - std::log(q[static_cast<size_t>(i)]));
        }
        return acc / static_cast<double>(batch);
    }
    }
    return 0.0;
}

Tensor reconstruction_loss_grad(const Tensor& y, const Tensor& yhat, LossKind kind) {
    require(y.same_shape(yhat), "reconstruction_loss_grad: shapes differ");
    int64_t n = y.numel();
    Tensor g(yhat.shape);
    switch (kind) {
    case LossKind::l2:
        for (int64_t i = 0; i < n; i++) g[i] = 2.0 * (yhat[i] - y[i]) / static_cast<double>(n);
        break;
    case LossKind::l1:
        for (int64_t i = 0; i < n; i++) {
            double d = yhat[i] - y[i];
            g[i] = (d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0)) / static_cast<double>(n);
        }
        break;
    case LossKind::cosine: {
        int64_t batch = y.shape[0], per = n / y.shape[0];
        for (int64_t b = 0; b < batch; b++) {
            const double* yr = y.data.data() + b * per;
            const double* hr = yhat.data.data() + b * per;
            double* gr = g.data.data() + b * per;
            double ny = 0.0, nh = 0.0, dot = 0.0;
            for (int64_t i = 0; i < per; i++) {
                ny += yr[i] * yr[i];
                nh += hr[i] * hr[i];
                dot += yr[i] * hr[i];
            }
            ny = std::sqrt(ny);
            nh = std::sqrt(nh);
            if (ny < kCosineNormFloor || nh < kCosineNormFloor) continue;
            double inv = 1.0 / (ny * nh);
            for (int64_t i = 0; i < per; i++)
                gr[i] = (-yr[i] * inv + dot * hr[i] * inv / (nh * nh)) /
                        static_cast<double>(batch);
        }
        break;
    }
    case LossKind::kl: {
        int64_t batch = y.shape[0], per = n / y.shape[0];
        std::vector<double> p(static_cast<size_t>(per)), q(static_cast<size_t>(per));
        for (int64_t b = 0; b < batch; b++) {
            softmax_row(y.data.data() + b * per, p.data(), per);
            softmax_row(yhat.data.data() + b * per, q.data(), per);
            double* gr = g.data.data() + b * per;
            for (int64_t i = 0; i < per; i++)
                gr[i] = (q[static_cast<size_t>(i)] - p[static_cast<size_t>(i)]) /
                        static_cast<double>(batch);
        }
        break;
    }
    }
    return g;
}

// ---------------------------------------------------------------------------
// rounding variable
// ---------------------------------------------------------------------------

const char* eps_domain_name(EpsDomain d) { return d == EpsDomain::unit ? "unit" : "real"; }

EpsDomain eps_domain_from_string(const std::string& s) {
    if (s == "unit") return EpsDomain::unit;
    if (s == "real") return EpsDomain::real_line;
    throw Error("unknown epsilon domain '" + s + "' (expected unit|real)");
}

double rectified_sigmoid(double raw) {
    double s = 1.0 / (1.0 + std::exp(-raw));
    double u = s * (kRectZeta - kRectGamma) + kRectGamma;
    return std::clamp(u, 0.0, 1.0);
}

double rectified_sigmoid_deriv(double raw) {
    double s = 1.0 / (1.0 + std::exp(-raw));
    double u = s * (kRectZeta - kRectGamma) + kRectGamma;
    // tolerance keeps weights that start exactly on a grid level trainable
    if (u < -1e-9 || u > 1.0 + 1e-9) return 0.0;
    return (kRectZeta - kRectGamma) * s * (1.0 - s);
}

std::vector<Grid> build_grids(const QuantParams& params, int64_t channels) {
    std::vector<Grid> grids;
    grids.reserve(static_cast<size_t>(channels));
    for (int64_t c = 0; c < channels; c++) grids.push_back(build_grid(params, c));
    return grids;
}

namespace {

int64_t channel_of(int64_t flat, int64_t per_channel) { return flat / per_channel; }

double logit(double p) { return std::log(p / (1.0 - p)); }

} // namespace

RoundingVar init_epsilon(const Tensor& w, const QuantParams& params,
                         const std::vector<Grid>& grids, EpsDomain domain, double beta) {
    require(!grids.empty(), "init_epsilon: no grids");
    (void)params;
    RoundingVar var;
    var.domain = domain;
    var.beta = beta;
    var.raw = Tensor(w.shape);
    int64_t per = w.numel() / static_cast<int64_t>(grids.size());
    if (domain == EpsDomain::unit) {
        var.floor_index = Tensor(w.shape);
        for (int64_t i = 0; i < w.numel(); i++) {
            const Grid& g = grids[static_cast<size_t>(channel_of(i, per))];
            double idx = to_index(g, w[i]);
            double fi = std::floor(idx);
            double frac = idx - fi;
            if (frac == 0.0 || frac == 1.0) var.boundary_inits++;
            var.floor_index[i] = fi;
            var.raw[i] = logit((frac - kRectGamma) / (kRectZeta - kRectGamma));
        }
    } else {
        for (int64_t i = 0; i < w.numel(); i++) {
            const Grid& g = grids[static_cast<size_t>(channel_of(i, per))];
            var.raw[i] = to_index(g, w[i]);
        }
    }
    return var;
}

Tensor effective_weight(const QuantParams& params, const std::vector<Grid>& grids,
                        const RoundingVar& var, Phase phase) {
    (void)params;
    Tensor w(var.raw.shape);
    int64_t per = w.numel() / static_cast<int64_t>(grids.size());
    for (int64_t i = 0; i < w.numel(); i++) {
        const Grid& g = grids[static_cast<size_t>(channel_of(i, per))];
        if (var.domain == EpsDomain::unit) {
            double eps = rectified_sigmoid(var.raw[i]);
            if (phase == Phase::eval) eps = eps >= 0.5 ? 1.0 : 0.0;
            w[i] = from_index(g, var.floor_index[i] + eps);
        } else {
            double k = phase == Phase::train ? soft_round(var.raw[i], var.beta)
                                             : hard_round_index(g, var.raw[i]);
            w[i] = from_index(g, k);
        }
    }
    return w;
}

Tensor effective_weight_grad_factor(const QuantParams& params, const std::vector<Grid>& grids,
                                    const RoundingVar& var) {
    (void)params;
    Tensor f(var.raw.shape);
    int64_t per = f.numel() / static_cast<int64_t>(grids.size());
    for (int64_t i = 0; i < f.numel(); i++) {
        const Grid& g = grids[static_cast<size_t>(channel_of(i, per))];
        if (var.domain == EpsDomain::unit) {
            int64_t fi = static_cast<int64_t>(var.floor_index[i]);
            double gap = fi + 1 <= g.count() - 1 && fi >= 0
                             ? g.levels[static_cast<size_t>(fi + 1)] -
                                   g.levels[static_cast<size_t>(fi)]
                             : 0.0;
            f[i] = gap * rectified_sigmoid_deriv(var.raw[i]);
        } else {
            double k = soft_round(var.raw[i], var.beta);
            f[i] = from_index_deriv(g, k) * soft_round_deriv(var.raw[i], var.beta);
        }
    }
    return f;
}

Tensor dequantize_state(const QuantParams& params, const std::vector<Grid>& grids,
                        const RoundingVar& var) {
    (void)params;
    Tensor w(var.raw.shape);
    int64_t per = w.numel() / static_cast<int64_t>(grids.size());
    for (int64_t i = 0; i < w.numel(); i++) {
        const Grid& g = grids[static_cast<size_t>(channel_of(i, per))];
        double k = var.domain == EpsDomain::unit
                       ? var.floor_index[i] + rectified_sigmoid(var.raw[i])
                       : var.raw[i];
        w[i] = from_index(g, k);
    }
    return w;
}

// ---------------------------------------------------------------------------
// masks
// ---------------------------------------------------------------------------

const char* mask_strategy_name(MaskStrategy s) {
    switch (s) {
    case MaskStrategy::none: return "none";
    case MaskStrategy::ambiguity_most: return "ambiguity_most";
    case MaskStrategy::ambiguity_least: return "ambiguity_least";
    case MaskStrategy::magnitude_low: return "magnitude_low";
    case MaskStrategy::magnitude_high: return "magnitude_high";
    }
    return "?";
}

MaskStrategy mask_strategy_from_string(const std::string& s) {
    if (s == "none") return MaskStrategy::none;
    if (s == "ambiguity_most") return MaskStrategy::ambiguity_most;
    if (s == "ambiguity_least") return MaskStrategy::ambiguity_least;
    if (s == "magnitude_low") return MaskStrategy::magnitude_low;
    if (s == "magnitude_high") return MaskStrategy::magnitude_high;
    throw Error("unknown mask strategy: " + s);
}

Tensor build_mask(const Tensor& w, const QuantParams& params, const std::vector<Grid>& grids,
                  const MaskSpec& spec) {
    (void)params;
    if (spec.strategy == MaskStrategy::none) return Tensor::full(w.shape, 1.0);
    require(spec.fraction > 0.0 && spec.fraction <= 1.0,
            "mask fraction must lie in (0, 1]");
    int64_t n = w.numel();
    int64_t count = static_cast<int64_t>(std::ceil(spec.fraction * static_cast<double>(n)));
    require(count >= 1, "mask selects zero entries");
    int64_t per = n / static_cast<int64_t>(grids.size());
    std::vector<double> score(static_cast<size_t>(n));
    bool take_high = spec.strategy == MaskStrategy::ambiguity_most ||
                     spec.strategy == MaskStrategy::magnitude_high;
    bool ambiguity = spec.strategy == MaskStrategy::ambiguity_most ||
                     spec.strategy == MaskStrategy::ambiguity_least;
    for (int64_t i = 0; i < n; i++) {
        if (ambiguity) {
            const Grid& g = grids[static_cast<size_t>(channel_of(i, per))];
            double idx = to_index(g, w[i]);
            score[static_cast<size_t>(i)] = std::fabs(idx - std::round(idx));
        } else {
            score[static_cast<size_t>(i)] = std::fabs(w[i]);
        }
    }
    std::vector<int64_t> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int64_t a, int64_t b) {
        double sa = score[static_cast<size_t>(a)], sb = score[static_cast<size_t>(b)];
        if (sa != sb) return take_high ? sa > sb : sa < sb;
        return a < b; // ties by flat index ascending
    });
    Tensor mask(w.shape);
    for (int64_t i = 0; i < count; i++) mask[order[static_cast<size_t>(i)]] = 1.0;
    return mask;
}

// ---------------------------------------------------------------------------
// bias perturbation
// ---------------------------------------------------------------------------

Tensor BiasPerturbation::value() const {
    Tensor v(raw.shape);
    for (int64_t i = 0; i < v.numel(); i++) {
        double s = 1.0 / (1.0 + std::exp(-raw[i]));
        v[i] = box[i] * (2.0 * s - 1.0);
    }
    return v;
}

Tensor BiasPerturbation::value_grad_factor() const {
    Tensor f(raw.shape);
    for (int64_t i = 0; i < f.numel(); i++) {
        double s = 1.0 / (1.0 + std::exp(-raw[i]));
        f[i] = box[i] * 2.0 * s * (1.0 - s);
    }
    return f;
}

BiasPerturbation make_bias_perturbation(const Tensor& bias, double alpha) {
    require(alpha >= 0.0, "bias alpha must be non-negative");
    BiasPerturbation p;
    p.alpha = alpha;
    if (alpha == 0.0 || bias.empty()) return p; // non-learnable, identically zero
    p.raw = Tensor(bias.shape);
    p.box = Tensor(bias.shape);
    for (int64_t i = 0; i < bias.numel(); i++) p.box[i] = alpha * std::fabs(bias[i]);
    return p;
}

// ---------------------------------------------------------------------------
// config helpers
// ---------------------------------------------------------------------------

const char* granularity_name(Granularity g) { return g == Granularity::layer ? "layer" : "block"; }

Granularity granularity_from_string(const std::string& s) {
    if (s == "layer") return Granularity::layer;
    if (s == "block") return Granularity::block;
    throw Error("unknown granularity '" + s + "' (expected layer|block)");
}

std::vector<int> weighted_layers(const NetworkRecord& net) {
    std::vector<int> out;
    for (int l = 0; l < net.num_layers(); l++)
        if (net.layers[static_cast<size_t>(l)].has_weights()) out.push_back(l);
    return out;
}

// ---------------------------------------------------------------------------
// unit forward / backward
// ---------------------------------------------------------------------------

namespace {

struct LayerCache {
    Tensor input;             // flowing input (before activation quantization)
    Tensor x_used;            // consumed by the op (after activation qdq)
    std::vector<uint8_t> ste; // in-range mask for the activation quantizer
    Tensor w_eff;
    Tensor pre;
    Tensor out;
};

std::vector<int64_t> iota_rows(int64_t begin, int64_t end) {
    std::vector<int64_t> rows;
    rows.reserve(static_cast<size_t>(end - begin));
    for (int64_t i = begin; i < end; i++) rows.push_back(i);
    return rows;
}

Tensor resolve_skip(const UnitContext& ctx, const LayerRecord& layer, const Tensor& x_batch,
                    const std::vector<int64_t>& rows, const std::vector<LayerCache>& caches) {
    int src = layer.skip_from;
    if (src >= ctx.first_layer) return caches[static_cast<size_t>(src - ctx.first_layer)].out;
    if (src == ctx.first_layer - 1) return x_batch; // covers src == -1 for the first unit
    if (src == -1) {
        require(ctx.network_input, "residual reference to the network input is unavailable");
        return gather_rows(*ctx.network_input, rows);
    }
    require(ctx.prefix_outputs && !(*ctx.prefix_outputs)[static_cast<size_t>(src)].empty(),
            "residual reference to an unfinalized layer");
    return gather_rows((*ctx.prefix_outputs)[static_cast<size_t>(src)], rows);
}

Tensor forward_cached(const UnitContext& ctx, const Tensor& x_batch,
                      const std::vector<int64_t>& rows, UnitMode mode,
                      std::vector<LayerCache>* caches) {
    int count = ctx.last_layer - ctx.first_layer;
    require(count > 0, "empty optimization unit");
    std::vector<LayerCache> local;
    std::vector<LayerCache>& cs = caches ? *caches : local;
    cs.assign(static_cast<size_t>(count), {});
    for (int k = 0; k < count; k++) {
        int l = ctx.first_layer + k;
        const LayerRecord& layer = ctx.net->layers[static_cast<size_t>(l)];
        const UnitLayerState& st = ctx.states[static_cast<size_t>(k)];
        LayerCache& c = cs[static_cast<size_t>(k)];
        c.input = k == 0 ? x_batch : cs[static_cast<size_t>(k - 1)].out;
        switch (layer.kind) {
        case LayerKind::linear:
        case LayerKind::conv2d: {
            bool fp = mode == UnitMode::fp_reference;
            c.x_used = c.input;
            if (!fp && st.act_bits > 0) {
                c.ste.assign(static_cast<size_t>(c.input.numel()), 0);
                double top = st.act_grid.max_level();
                for (int64_t i = 0; i < c.input.numel(); i++) {
                    double v = c.input[i];
                    c.ste[static_cast<size_t>(i)] = std::fabs(v) <= top ? 1 : 0;
                    c.x_used[i] = quantize_dequantize(st.act_grid, v);
                }
            }
            Tensor bias_eff;
            const Tensor* bias = nullptr;
            if (fp) {
                bias = &layer.bias;
                c.w_eff = layer.weights;
            } else {
                c.w_eff = effective_weight(st.params, st.grids, st.rounding,
                                           mode == UnitMode::train ? Phase::train : Phase::eval);
                bias_eff = st.bias_current;
                if (st.bias_pert.enabled()) {
                    Tensor pv = st.bias_pert.value();
                    for (int64_t i = 0; i < bias_eff.numel(); i++) bias_eff[i] += pv[i];
                }
                bias = &bias_eff;
            }
            c.pre = layer.kind == LayerKind::linear
                        ? linear_forward(c.w_eff, bias, c.x_used, l)
                        : conv2d_forward(c.w_eff, bias, c.x_used, layer.stride, layer.padding, l);
            break;
        }
        case LayerKind::relu: {
            c.pre = c.input;
            for (double& v : c.pre.data)
                if (v <= 0.0) v = 0.0;
            break;
        }
        case LayerKind::residual_add: {
            Tensor skip = resolve_skip(ctx, layer, x_batch, rows, cs);
            require(c.input.same_shape(skip), "residual shapes differ inside unit");
            c.pre = c.input;
            for (int64_t i = 0; i < c.pre.numel(); i++) c.pre[i] += skip[i];
            break;
        }
        case LayerKind::global_avg_pool: {
            const Tensor& x = c.input;
            require(x.rank() == 4, "global_avg_pool input must be 4-d");
            int64_t batch = x.shape[0], ch = x.shape[1], h = x.shape[2], w = x.shape[3];
            c.pre = Tensor({batch, ch});
            double inv = 1.0 / static_cast<double>(h * w);
            for (int64_t b = 0; b < batch; b++)
                for (int64_t cc = 0; cc < ch; cc++) {
                    double acc = 0.0;
                    for (int64_t i = 0; i < h; i++)
                        for (int64_t j = 0; j < w; j++) acc += x.at4(b, cc, i, j);
                    c.pre.at2(b, cc) = acc * inv;
                }
            break;
        }
        case LayerKind::flatten: {
            c.pre = c.input;
            c.pre.shape = {c.input.shape[0], c.input.numel() / c.input.shape[0]};
            break;
        }
        }
        c.out = c.pre;
        if (layer.activation == FusedAct::relu)
            for (double& v : c.out.data)
                if (v <= 0.0) v = 0.0;
    }
    return cs.back().out;
}

// Backward through the unit in train mode: fills per-state gradients of the
// rounding raws and (when enabled) bias perturbation raws.
void backward_unit(const UnitContext& ctx, const std::vector<LayerCache>& caches,
                   const Tensor& dY, std::vector<Tensor>& raw_grads,
                   std::vector<Tensor>& bias_raw_grads) {
    int count = ctx.last_layer - ctx.first_layer;
    raw_grads.assign(static_cast<size_t>(count), Tensor());
    bias_raw_grads.assign(static_cast<size_t>(count), Tensor());
    std::vector<Tensor> gout(static_cast<size_t>(count));
    gout[static_cast<size_t>(count - 1)] = dY;
    auto add_into = [](Tensor& dst, const Tensor& src) {
        if (dst.empty()) {
            dst = src;
            return;
        }
        for (int64_t i = 0; i < src.numel(); i++) dst[i] += src[i];
    };
    for (int k = count - 1; k >= 0; k--) {
        int l = ctx.first_layer + k;
        const LayerRecord& layer = ctx.net->layers[static_cast<size_t>(l)];
        const UnitLayerState& st = ctx.states[static_cast<size_t>(k)];
        const LayerCache& c = caches[static_cast<size_t>(k)];
        Tensor g = gout[static_cast<size_t>(k)];
        if (g.empty()) g = Tensor(c.out.shape);
        if (layer.activation == FusedAct::relu)
            for (int64_t i = 0; i < g.numel(); i++)
                if (c.pre[i] <= 0.0) g[i] = 0.0;
        Tensor gx;
        switch (layer.kind) {
        case LayerKind::linear:
        case LayerKind::conv2d: {
            Tensor gw, gb;
            bool want_bias = st.bias_pert.enabled();
            if (layer.kind == LayerKind::linear)
                linear_backward(c.w_eff, c.x_used, g, &gw, want_bias ? &gb : nullptr, &gx);
            else
                conv2d_backward(c.w_eff, c.x_used, g, layer.stride, layer.padding, &gw,
                                want_bias ? &gb : nullptr, &gx);
            Tensor factor = effective_weight_grad_factor(st.params, st.grids, st.rounding);
            Tensor rg(gw.shape);
            for (int64_t i = 0; i < rg.numel(); i++)
                rg[i] = gw[i] * factor[i] * st.mask[i];
            raw_grads[static_cast<size_t>(k)] = std::move(rg);
            if (want_bias) {
                Tensor bf = st.bias_pert.value_grad_factor();
                Tensor bg(gb.shape);
                for (int64_t i = 0; i < bg.numel(); i++) bg[i] = gb[i] * bf[i];
                bias_raw_grads[static_cast<size_t>(k)] = std::move(bg);
            }
            if (!c.ste.empty())
                for (int64_t i = 0; i < gx.numel(); i++)
                    if (!c.ste[static_cast<size_t>(i)]) gx[i] = 0.0;
            break;
        }
        case LayerKind::relu:
            gx = g;
            for (int64_t i = 0; i < gx.numel(); i++)
                if (c.input[i] <= 0.0) gx[i] = 0.0;
            break;
        case LayerKind::residual_add: {
            gx = g;
            int src = layer.skip_from;
            if (src >= ctx.first_layer)
                add_into(gout[static_cast<size_t>(src - ctx.first_layer)], g);
            // references below the unit are constants
            break;
        }
        case LayerKind::global_avg_pool: {
            const Tensor& x = c.input;
            int64_t batch = x.shape[0], ch = x.shape[1], h = x.shape[2], w = x.shape[3];
            gx = Tensor(x.shape);
            double inv = 1.0 / static_cast<double>(h * w);
            for (int64_t b = 0; b < batch; b++)
                for (int64_t cc = 0; cc < ch; cc++) {
                    double gv = g.at2(b, cc) * inv;
                    for (int64_t i = 0; i < h; i++)
                        for (int64_t j = 0; j < w; j++) gx.at4(b, cc, i, j) = gv;
                }
            break;
        }
        case LayerKind::flatten:
            gx = g;
            gx.shape = c.input.shape;
            break;
        }
        if (k > 0) add_into(gout[static_cast<size_t>(k - 1)], gx);
    }
}

} // namespace

Tensor unit_forward(const UnitContext& ctx, const Tensor& x_batch,
                    const std::vector<int64_t>& rows, UnitMode mode) {
    return forward_cached(ctx, x_batch, rows, mode, nullptr);
}

double unit_loss_and_grads(const UnitContext& ctx, const Tensor& x_batch,
                           const std::vector<int64_t>& rows, const Tensor& y_ref, LossKind kind,
                           std::vector<Tensor>* raw_grads, std::vector<Tensor>* bias_raw_grads) {
    std::vector<LayerCache> caches;
    Tensor out = forward_cached(ctx, x_batch, rows, UnitMode::train, &caches);
    double loss = reconstruction_loss(y_ref, out, kind);
    Tensor dY = reconstruction_loss_grad(y_ref, out, kind);
    std::vector<Tensor> rg, bg;
    backward_unit(ctx, caches, dY, rg, bg);
    if (raw_grads) *raw_grads = std::move(rg);
    if (bias_raw_grads) *bias_raw_grads = std::move(bg);
    return loss;
}

namespace {

// shared state construction for a unit: quant params, grids, rounding init,
// masks, bias carriers, and the activation grids from a full-precision pass
void setup_unit_states(UnitContext& ctx, const GptqConfig& cfg, int pin_first, int pin_last,
                       const std::vector<std::vector<int>>* channel_bits,
                       QuantizeReport* report) {
    for (int l = ctx.first_layer; l < ctx.last_layer; l++) {
        UnitLayerState st;
        st.layer_index = l;
        const LayerRecord& layer = ctx.net->layers[static_cast<size_t>(l)];
        if (layer.has_weights()) {
            st.quantize = true;
            st.params.scheme = cfg.scheme;
            st.params.power_exponent = cfg.power_exponent;
            bool pinned = l == pin_first || l == pin_last;
            st.params.bits = pinned ? 8 : cfg.bits;
            if (!pinned && channel_bits && !(*channel_bits)[static_cast<size_t>(l)].empty())
                st.params.channel_bits = (*channel_bits)[static_cast<size_t>(l)];
            compute_scales(st.params, layer.weights);
            st.grids = build_grids(st.params, layer.weights.shape[0]);
            st.rounding =
                init_epsilon(layer.weights, st.params, st.grids, cfg.domain, cfg.resolved_beta());
            st.mask = build_mask(layer.weights, st.params, st.grids, cfg.mask);
            st.bias_current = layer.has_bias() ? layer.bias : Tensor({layer.weights.shape[0]});
            st.bias_pert = make_bias_perturbation(layer.bias, cfg.bias_alpha);
            st.act_bits = cfg.act_bits == 0 ? 0 : (pinned ? 8 : cfg.act_bits);
            if (report) {
                report->scale_fallback = report->scale_fallback || st.params.scale_fallback;
                report->boundary_inits += st.rounding.boundary_inits;
            }
        }
        ctx.states.push_back(std::move(st));
    }
    // activation scales from the unit's full-precision pass over its inputs
    bool any = false;
    for (const UnitLayerState& st : ctx.states) any = any || st.quantize;
    if (!any) return;
    int64_t n = ctx.unit_input->shape[0];
    std::vector<double> maxabs(ctx.states.size(), 0.0);
    const int64_t chunk = 64;
    std::vector<LayerCache> caches;
    for (int64_t start = 0; start < n; start += chunk) {
        int64_t stop = std::min(n, start + chunk);
        std::vector<int64_t> rows = iota_rows(start, stop);
        Tensor x = gather_rows(*ctx.unit_input, rows);
        forward_cached(ctx, x, rows, UnitMode::fp_reference, &caches);
        for (size_t k = 0; k < ctx.states.size(); k++)
            if (ctx.states[k].quantize)
                maxabs[k] = std::max(maxabs[k], max_abs(caches[k].input));
    }
    for (size_t k = 0; k < ctx.states.size(); k++) {
        UnitLayerState& st = ctx.states[k];
        if (!st.quantize || st.act_bits == 0) continue;
        st.act_scale = compute_act_scale(maxabs[k], st.act_bits, &st.act_scale_fallback);
        st.act_grid = build_uniform_grid(st.act_bits, st.act_scale);
    }
}

} // namespace

UnitContext make_unit_context(const NetworkRecord& net, int first, int last, const Tensor& input,
                              const GptqConfig& cfg) {
    require(first >= 0 && last > first && last <= net.num_layers(),
            "make_unit_context: bad layer range");
    UnitContext ctx;
    ctx.net = &net;
    ctx.first_layer = first;
    ctx.last_layer = last;
    ctx.unit_input = &input;
    setup_unit_states(ctx, cfg, -1, -1, nullptr, nullptr);
    return ctx;
}

// ---------------------------------------------------------------------------
// unit optimization
// ---------------------------------------------------------------------------

namespace {

// mean squared error over the whole set, evaluated in chunks
double full_set_l2(const UnitContext& ctx, const Tensor& y_fp_full, UnitMode mode) {
    int64_t n = ctx.unit_input->shape[0];
    double acc = 0.0;
    int64_t elems = 0;
    const int64_t chunk = 64;
    for (int64_t start = 0; start < n; start += chunk) {
        int64_t stop = std::min(n, start + chunk);
        std::vector<int64_t> rows = iota_rows(start, stop);
        Tensor x = gather_rows(*ctx.unit_input, rows);
        Tensor out = unit_forward(ctx, x, rows, mode);
        Tensor ref = gather_rows(y_fp_full, rows);
        for (int64_t i = 0; i < out.numel(); i++) {
            double d = out[i] - ref[i];
            acc += d * d;
        }
        elems += out.numel();
    }
    return acc / static_cast<double>(elems);
}

struct Snapshot {
    std::vector<Tensor> raws;
    std::vector<Tensor> bias_raws;
};

Snapshot take_snapshot(const UnitContext& ctx) {
    Snapshot s;
    for (const UnitLayerState& st : ctx.states) {
        s.raws.push_back(st.rounding.raw);
        s.bias_raws.push_back(st.bias_pert.raw);
    }
    return s;
}

void restore_snapshot(UnitContext& ctx, const Snapshot& s) {
    for (size_t k = 0; k < ctx.states.size(); k++) {
        ctx.states[k].rounding.raw = s.raws[k];
        ctx.states[k].bias_pert.raw = s.bias_raws[k];
    }
}

} // namespace

UnitResult optimize_unit(UnitContext& ctx, const Tensor& y_fp_full, const GptqConfig& cfg,
                         int unit_counter) {
    UnitResult res;
    int64_t n = ctx.unit_input->shape[0];
    require(n >= 1, "optimize_unit: empty calibration inputs");
    int64_t n_val = std::max<int64_t>(1, n / 10);
    int64_t n_train = n - n_val;
    if (n_train < 1) {
        n_train = n; // degenerate tiny sets share rows between train and val
        n_val = n;
    }
    std::vector<int64_t> val_rows = iota_rows(n - n_val, n);
    Tensor x_val = gather_rows(*ctx.unit_input, val_rows);
    Tensor y_val = gather_rows(y_fp_full, val_rows);

    std::vector<int> learnable;
    for (size_t k = 0; k < ctx.states.size(); k++)
        if (ctx.states[k].quantize) learnable.push_back(static_cast<int>(k));

    res.nearest_l2 = full_set_l2(ctx, y_fp_full, UnitMode::eval);
    if (learnable.empty() || cfg.iterations == 0) {
        res.final_l2 = res.nearest_l2;
        return res;
    }

    Snapshot init = take_snapshot(ctx);
    Snapshot best = init;
    auto val_loss = [&]() {
        Tensor out = unit_forward(ctx, x_val, val_rows, UnitMode::eval);
        return reconstruction_loss(y_val, out, cfg.loss);
    };
    double best_val = val_loss();
    res.trace.push_back({0, std::numeric_limits<double>::quiet_NaN(), best_val});

    std::vector<std::optional<Optimizer>> wopt(ctx.states.size());
    std::vector<std::optional<Optimizer>> bopt(ctx.states.size());
    for (int k : learnable) {
        UnitLayerState& st = ctx.states[static_cast<size_t>(k)];
        wopt[static_cast<size_t>(k)].emplace(cfg.optimizer, st.rounding.raw.numel());
        if (st.bias_pert.enabled())
            bopt[static_cast<size_t>(k)].emplace(cfg.optimizer, st.bias_pert.raw.numel());
    }

    std::vector<LayerCache> caches;
    std::vector<Tensor> raw_grads, bias_raw_grads;
    bool aborted = false;
    double last_train_loss = std::numeric_limits<double>::quiet_NaN();
    for (int64_t step = 0; step < cfg.iterations && !aborted; step++) {
        std::vector<int64_t> rows(static_cast<size_t>(cfg.batch_size));
        for (int s = 0; s < cfg.batch_size; s++)
            rows[static_cast<size_t>(s)] = static_cast<int64_t>(
                hash_keys({cfg.seed, 0xba7c4ull, static_cast<uint64_t>(unit_counter),
                           static_cast<uint64_t>(step), static_cast<uint64_t>(s)}) %
                static_cast<uint64_t>(n_train));
        Tensor xb = gather_rows(*ctx.unit_input, rows);
        Tensor yb = gather_rows(y_fp_full, rows);
        if (cfg.augment != AugmentKind::none) {
            Rng aug_rng(cfg.seed, hash_keys({0xa116ull, static_cast<uint64_t>(unit_counter),
                                             static_cast<uint64_t>(step)}));
            xb = augment_features(xb, cfg.augment, cfg.resolved_augment_magnitude(), aug_rng);
        }
        Tensor out = forward_cached(ctx, xb, rows, UnitMode::train, &caches);
        double loss = reconstruction_loss(yb, out, cfg.loss);
        last_train_loss = loss;
        if (!std::isfinite(loss)) {
            res.aborted = true;
            res.diagnostic = "non-finite loss at step " + std::to_string(step) + " of unit " +
                             std::to_string(unit_counter) + "; fell back to nearest rounding";
            aborted = true;
            break;
        }
        if (step % 100 == 0) {
            double vl = val_loss();
            if (step == 0)
                res.trace[0].train_loss = loss;
            else
                res.trace.push_back({step, loss, vl});
            if (vl < best_val) {
                best_val = vl;
                best = take_snapshot(ctx);
            }
        }
        Tensor dY = reconstruction_loss_grad(yb, out, cfg.loss);
        backward_unit(ctx, caches, dY, raw_grads, bias_raw_grads);
        for (int k : learnable) {
            UnitLayerState& st = ctx.states[static_cast<size_t>(k)];
            Tensor frozen = st.rounding.raw;
            wopt[static_cast<size_t>(k)]->step(st.rounding.raw.data,
                                               raw_grads[static_cast<size_t>(k)].data);
            // frozen entries stay bit-identical
            for (int64_t i = 0; i < st.mask.numel(); i++)
                if (st.mask[i] == 0.0) st.rounding.raw[i] = frozen[i];
            if (st.bias_pert.enabled())
                bopt[static_cast<size_t>(k)]->step(st.bias_pert.raw.data,
                                                   bias_raw_grads[static_cast<size_t>(k)].data);
#ifndef NDEBUG
            if (st.rounding.domain == EpsDomain::unit)
                for (int64_t i = 0; i < st.rounding.raw.numel(); i++) {
                    double e = rectified_sigmoid(st.rounding.raw[i]);
                    assert(e >= 0.0 && e <= 1.0);
                }
#endif
        }
    }
    if (!aborted) {
        double vl = val_loss();
        res.trace.push_back({cfg.iterations, last_train_loss, vl});
        if (vl < best_val) {
            best_val = vl;
            best = take_snapshot(ctx);
        }
        restore_snapshot(ctx, best);
        res.final_l2 = full_set_l2(ctx, y_fp_full, UnitMode::eval);
        if (res.final_l2 > res.nearest_l2) {
            restore_snapshot(ctx, init);
            res.final_l2 = res.nearest_l2;
            res.fell_back = true;
        }
    } else {
        restore_snapshot(ctx, init);
        res.final_l2 = res.nearest_l2;
        res.fell_back = true;
    }
    return res;
}

// ---------------------------------------------------------------------------
// bias correction
// ---------------------------------------------------------------------------

namespace {

// per-output-channel mean of a pre-activation tensor (batch or batch+spatial)
std::vector<double> channel_means(const Tensor& pre) {
    require(pre.rank() == 2 || pre.rank() == 4, "channel_means: unexpected rank");
    int64_t ch = pre.shape[1];
    std::vector<double> mean(static_cast<size_t>(ch), 0.0);
    if (pre.rank() == 2) {
        int64_t batch = pre.shape[0];
        for (int64_t b = 0; b < batch; b++)
            for (int64_t c = 0; c < ch; c++) mean[static_cast<size_t>(c)] += pre.at2(b, c);
        for (double& m : mean) m /= static_cast<double>(batch);
    } else {
        int64_t batch = pre.shape[0], h = pre.shape[2], w = pre.shape[3];
        for (int64_t b = 0; b < batch; b++)
            for (int64_t c = 0; c < ch; c++)
                for (int64_t i = 0; i < h; i++)
                    for (int64_t j = 0; j < w; j++) mean[static_cast<size_t>(c)] += pre.at4(b, c, i, j);
        for (double& m : mean) m /= static_cast<double>(batch * h * w);
    }
    return mean;
}

Tensor layer_preact(const LayerRecord& layer, const Tensor& x) {
    return layer.kind == LayerKind::linear
               ? linear_forward(layer.weights, &layer.bias, x, -1)
               : conv2d_forward(layer.weights, &layer.bias, x, layer.stride, layer.padding, -1);
}

} // namespace

Tensor bias_corrected(const LayerRecord& fp_layer, const LayerRecord& q_layer, const Tensor& x) {
    require(fp_layer.kind == LayerKind::linear || fp_layer.kind == LayerKind::conv2d,
            "bias correction applies to weighted layers");
    std::vector<double> m_fp = channel_means(layer_preact(fp_layer, x));
    std::vector<double> m_q = channel_means(layer_preact(q_layer, x));
    Tensor b = q_layer.has_bias() ? q_layer.bias
                                  : Tensor({fp_layer.weights.shape[0]});
    for (int64_t i = 0; i < b.numel(); i++)
        b[i] += m_fp[static_cast<size_t>(i)] - m_q[static_cast<size_t>(i)];
    return b;
}

namespace {

// channel means of one in-unit layer's pre-activation over the full set
std::vector<double> unit_preact_means(const UnitContext& ctx, int state_index, UnitMode mode) {
    int64_t n = ctx.unit_input->shape[0];
    std::vector<double> sums;
    int64_t denom = 0;
    const int64_t chunk = 64;
    std::vector<LayerCache> caches;
    for (int64_t start = 0; start < n; start += chunk) {
        int64_t stop = std::min(n, start + chunk);
        std::vector<int64_t> rows = iota_rows(start, stop);
        Tensor x = gather_rows(*ctx.unit_input, rows);
        forward_cached(ctx, x, rows, mode, &caches);
        const Tensor& pre = caches[static_cast<size_t>(state_index)].pre;
        int64_t ch = pre.shape[1];
        int64_t per_ch = pre.numel() / (pre.shape[0] * ch);
        if (sums.empty()) sums.assign(static_cast<size_t>(ch), 0.0);
        for (int64_t b = 0; b < pre.shape[0]; b++)
            for (int64_t c = 0; c < ch; c++) {
                const double* base = pre.data.data() + (b * ch + c) * per_ch;
                for (int64_t i = 0; i < per_ch; i++) sums[static_cast<size_t>(c)] += base[i];
            }
        denom += pre.shape[0] * per_ch;
    }
    for (double& s : sums) s /= static_cast<double>(denom);
    return sums;
}

} // namespace

// ---------------------------------------------------------------------------
// whole-network pipeline
// ---------------------------------------------------------------------------

QuantizedNetwork quantize_network(const NetworkRecord& net, const CalibrationSet& calib,
                                  const GptqConfig& cfg,
                                  const std::vector<std::vector<int>>* channel_bits,
                                  QuantizeReport* report) {
    net.validate();
    require(calib.size() >= 1, "quantize_network: empty calibration set");
    std::vector<int> wl = weighted_layers(net);
    require(!wl.empty(), "quantize_network: no weighted layers");
    int first_w = wl.front(), last_w = wl.back();
    if (channel_bits)
        require(channel_bits->size() == net.layers.size(),
                "channel_bits must carry one entry per layer");

    Tensor x0 = calib.stacked();
    std::vector<Tensor> prefix_outputs(static_cast<size_t>(net.num_layers()));
    QuantizedNetwork out;
    out.net = net;
    out.meta.assign(static_cast<size_t>(net.num_layers()), {});

    std::vector<std::pair<int, int>> units;
    if (cfg.granularity == Granularity::layer) {
        for (int l = 0; l < net.num_layers(); l++) units.push_back({l, l + 1});
    } else {
        for (int b = 0; b < net.num_blocks(); b++) units.push_back(net.block_range(b));
    }

    int unit_counter = 0;
    for (auto [a, bnd] : units) {
        auto t0 = std::chrono::steady_clock::now();
        UnitContext ctx;
        ctx.net = &net;
        ctx.first_layer = a;
        ctx.last_layer = bnd;
        ctx.unit_input = a == 0 ? &x0 : &prefix_outputs[static_cast<size_t>(a - 1)];
        ctx.prefix_outputs = &prefix_outputs;
        ctx.network_input = &x0;
        setup_unit_states(ctx, cfg, first_w, last_w, channel_bits, report);
        bool any_weights = false;
        for (const UnitLayerState& st : ctx.states) any_weights = any_weights || st.quantize;

        // full-precision reference outputs of the unit on its (quantized-prefix) inputs
        Tensor y_fp;
        {
            int64_t n = ctx.unit_input->shape[0];
            const int64_t chunk = 64;
            std::vector<Tensor> parts;
            for (int64_t start = 0; start < n; start += chunk) {
                int64_t stop = std::min(n, start + chunk);
                std::vector<int64_t> rows = iota_rows(start, stop);
                Tensor x = gather_rows(*ctx.unit_input, rows);
                parts.push_back(unit_forward(ctx, x, rows, UnitMode::fp_reference));
            }
            std::vector<const Tensor*> ptrs;
            // parts are batched; concatenate by rows
            int64_t total = 0;
            for (const Tensor& p : parts) total += p.shape[0];
            std::vector<int64_t> shape = parts[0].shape;
            shape[0] = total;
            y_fp = Tensor(shape);
            int64_t off = 0;
            for (const Tensor& p : parts) {
                std::copy(p.data.begin(), p.data.end(), y_fp.data.begin() + off);
                off += p.numel();
            }
        }

        UnitResult ures;
        if (any_weights) {
            ures = optimize_unit(ctx, y_fp, cfg, unit_counter);
            // fold the learned bias perturbation into the bias, then correct
            for (UnitLayerState& st : ctx.states) {
                if (st.bias_pert.enabled()) {
                    Tensor pv = st.bias_pert.value();
                    for (int64_t i = 0; i < st.bias_current.numel(); i++)
                        st.bias_current[i] += pv[i];
                    st.bias_pert.alpha = 0.0; // disabled from here on
                }
            }
            for (size_t k = 0; k < ctx.states.size(); k++) {
                UnitLayerState& st = ctx.states[k];
                if (!st.quantize) continue;
                const LayerRecord& layer = net.layers[static_cast<size_t>(st.layer_index)];
                if (!layer.has_bias()) continue;
                std::vector<double> m_fp =
                    unit_preact_means(ctx, static_cast<int>(k), UnitMode::fp_reference);
                std::vector<double> m_q =
                    unit_preact_means(ctx, static_cast<int>(k), UnitMode::eval);
                for (int64_t i = 0; i < st.bias_current.numel(); i++)
                    st.bias_current[i] += m_fp[static_cast<size_t>(i)] - m_q[static_cast<size_t>(i)];
            }
        }

        // finalize weights/bias and metadata
        for (UnitLayerState& st : ctx.states) {
            if (!st.quantize) continue;
            LayerRecord& dst = out.net.layers[static_cast<size_t>(st.layer_index)];
            dst.weights = effective_weight(st.params, st.grids, st.rounding, Phase::eval);
            if (dst.has_bias()) dst.bias = st.bias_current;
            LayerQuantMeta& qm = out.meta[static_cast<size_t>(st.layer_index)];
            qm.quantized = true;
            qm.scheme = st.params.scheme;
            qm.wbits.clear();
            for (int64_t c = 0; c < st.rounding.raw.shape[0]; c++)
                qm.wbits.push_back(st.params.bits_for(c));
            qm.wscales = st.params.weight_scales;
            qm.power_exponent = st.params.power_exponent;
            qm.float_layout = st.params.float_layout_set
                                  ? st.params.float_layout
                                  : default_float_layout(st.params.bits);
            qm.act_bits = st.act_bits;
            qm.act_scale = st.act_scale;
        }

        // finalized unit outputs become the prefix for the next unit
        {
            int64_t n = ctx.unit_input->shape[0];
            const int64_t chunk = 64;
            std::vector<LayerCache> caches;
            std::vector<Tensor> collected(ctx.states.size());
            for (int64_t start = 0; start < n; start += chunk) {
                int64_t stop = std::min(n, start + chunk);
                std::vector<int64_t> rows = iota_rows(start, stop);
                Tensor x = gather_rows(*ctx.unit_input, rows);
                forward_cached(ctx, x, rows, UnitMode::eval, &caches);
                for (size_t k = 0; k < ctx.states.size(); k++) {
                    const Tensor& o = caches[k].out;
                    if (collected[k].empty()) {
                        std::vector<int64_t> shape = o.shape;
                        shape[0] = n;
                        collected[k] = Tensor(shape);
                    }
                    int64_t per = o.numel() / o.shape[0];
                    std::copy(o.data.begin(), o.data.end(),
                              collected[k].data.begin() + start * per);
                }
            }
            for (size_t k = 0; k < ctx.states.size(); k++)
                prefix_outputs[static_cast<size_t>(ctx.first_layer) + k] = std::move(collected[k]);
        }

        if (report) {
            UnitReport ur;
            ur.unit_index = unit_counter;
            for (int l = a; l < bnd; l++) ur.layer_indices.push_back(l);
            ur.has_weights = any_weights;
            ur.result = std::move(ures);
            ur.wall_seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            report->units.push_back(std::move(ur));
        }
        unit_counter++;
    }
    out.net.validate();
    return out;
}

Tensor quantized_network_forward(const NetworkRecord& qnet,
                                 const std::vector<LayerQuantMeta>& meta, const Tensor& x) {
    require(meta.size() == qnet.layers.size(), "quant metadata count mismatch");
    Tensor cur = x;
    std::vector<Tensor> outputs;
    for (int l = 0; l < qnet.num_layers(); l++) {
        const LayerRecord& layer = qnet.layers[static_cast<size_t>(l)];
        const LayerQuantMeta& qm = meta[static_cast<size_t>(l)];
        Tensor in = cur;
        if (layer.has_weights() && qm.act_bits > 0) {
            Grid g = build_uniform_grid(qm.act_bits, qm.act_scale);
            for (double& v : in.data) v = quantize_dequantize(g, v);
        }
        const Tensor* skip = nullptr;
        if (layer.kind == LayerKind::residual_add)
            skip = layer.skip_from < 0 ? &x : &outputs[static_cast<size_t>(layer.skip_from)];
        outputs.push_back(layer_forward(layer, in, skip, l));
        cur = outputs.back();
    }
    return cur;
}

double quantized_top1_accuracy(const NetworkRecord& qnet, const std::vector<LayerQuantMeta>& meta,
                               const CalibrationSet& dataset) {
    require(dataset.labeled(), "accuracy needs labels");
    int64_t n = dataset.size();
    int64_t correct = 0;
    const int64_t chunk = 64;
    for (int64_t start = 0; start < n; start += chunk) {
        int64_t stop = std::min(n, start + chunk);
        std::vector<int64_t> rows;
        for (int64_t i = start; i < stop; i++) rows.push_back(i);
        Tensor logits = quantized_network_forward(qnet, meta, dataset.stacked(rows));
        int64_t classes = logits.shape[1];
        for (int64_t b = 0; b < stop - start; b++) {
            const double* lr = logits.data.data() + b * classes;
            int64_t arg = 0;
            for (int64_t c = 1; c < classes; c++)
                if (lr[c] > lr[arg]) arg = c;
            if (arg == dataset.labels[static_cast<size_t>(start + b)]) correct++;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(n);
}

} // namespace gptq
