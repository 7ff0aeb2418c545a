#include "gptq/codec.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace gptq {

const char* scheme_name(Scheme s) {
    switch (s) {
    case Scheme::uniform: return "uniform";
    case Scheme::logarithmic: return "log";
    case Scheme::floatgrid: return "float";
    case Scheme::power: return "power";
    }
    return "?";
}

Scheme scheme_from_string(const std::string& s) {
    if (s == "uniform") return Scheme::uniform;
    if (s == "log") return Scheme::logarithmic;
    if (s == "float") return Scheme::floatgrid;
    if (s == "power") return Scheme::power;
    throw Error("unknown scheme '" + s + "' (expected uniform|log|float|power)");
}

FloatLayout default_float_layout(int bits) {
    require(bits >= 2, "float layout needs at least 2 bits");
    FloatLayout fl;
    fl.exponent_bits = std::min(2, bits - 2);
    if (fl.exponent_bits < 1) fl.exponent_bits = 1;
    fl.mantissa_bits = bits - 1 - fl.exponent_bits;
    return fl;
}

bool Grid::contains(double v) const {
    auto it = std::lower_bound(levels.begin(), levels.end(), v);
    return it != levels.end() && *it == v;
}

namespace {

void check_bits(int bits) { require(bits >= 2 && bits <= 8, "bits must lie in [2, 8]"); }

std::vector<double> float_levels_unscaled(FloatLayout fl) {
    // Enumerate every code of the (1, e, m) layout. No inf/NaN codes: the
    // all-ones exponent is an ordinary value.
    int e = fl.exponent_bits, m = fl.mantissa_bits;
    require(e >= 1 && m >= 0, "bad float layout");
    int bias = (1 << (e - 1)) - 1;
    std::vector<double> vals;
    for (int sign = 0; sign < 2; sign++)
        for (int E = 0; E < (1 << e); E++)
            for (int M = 0; M < (1 << m); M++) {
                double mant = static_cast<double>(M) / static_cast<double>(1 << m);
                double mag = E == 0 ? std::ldexp(mant, 1 - bias) : std::ldexp(1.0 + mant, E - bias);
                vals.push_back(sign ? -mag : mag);
            }
    std::sort(vals.begin(), vals.end());
    vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
    return vals;
}

} // namespace

double grid_max_unscaled(Scheme scheme, int bits, double power_exponent, FloatLayout layout) {
    check_bits(bits);
    int64_t q = (1ll << (bits - 1)) - 1;
    switch (scheme) {
    case Scheme::uniform: return static_cast<double>(q);
    case Scheme::logarithmic: return 1.0;
    case Scheme::floatgrid: return float_levels_unscaled(layout).back();
    case Scheme::power: return static_cast<double>(q); // top level sits at s * q
    }
    (void)power_exponent;
    return 1.0;
}

void compute_scales(QuantParams& params, const Tensor& w) {
    require(!w.empty(), "compute_scales: empty weights");
    int64_t channels = w.shape[0];
    int64_t per = w.numel() / channels;
    params.weight_scales.assign(static_cast<size_t>(channels), 1.0);
    params.scale_fallback = false;
    for (int64_t c = 0; c < channels; c++) {
        int bits = params.bits_for(c);
        check_bits(bits);
        double maxabs = max_abs_range(w, c * per, (c + 1) * per);
        if (maxabs == 0.0) {
            params.weight_scales[static_cast<size_t>(c)] = 1.0;
            params.scale_fallback = true;
            continue;
        }
        FloatLayout fl =
            params.float_layout_set ? params.float_layout : default_float_layout(bits);
        double top = grid_max_unscaled(params.scheme, bits, params.power_exponent, fl);
        params.weight_scales[static_cast<size_t>(c)] = maxabs / top;
    }
}

double compute_act_scale(double maxabs, int bits, bool* fallback) {
    check_bits(bits);
    if (fallback) *fallback = false;
    if (maxabs == 0.0) {
        if (fallback) *fallback = true;
        return 1.0;
    }
    return maxabs / static_cast<double>((1ll << (bits - 1)) - 1);
}

Grid build_uniform_grid(int bits, double scale) {
    check_bits(bits);
    require(scale > 0.0, "scale must be positive");
    int64_t q = (1ll << (bits - 1)) - 1;
    Grid g;
    g.levels.reserve(static_cast<size_t>(2 * q + 1));
    for (int64_t k = -q; k <= q; k++) g.levels.push_back(static_cast<double>(k) * scale);
    g.zero_index = q;
    return g;
}

Grid build_grid(const QuantParams& params, int64_t channel) {
    require(channel >= 0 && channel < static_cast<int64_t>(params.weight_scales.size()),
            "build_grid: channel without a scale");
    double s = params.weight_scales[static_cast<size_t>(channel)];
    require(s > 0.0, "build_grid: scale must be positive");
    int bits = params.bits_for(channel);
    check_bits(bits);
    int64_t q = (1ll << (bits - 1)) - 1;
    Grid g;
    switch (params.scheme) {
    case Scheme::uniform:
        return build_uniform_grid(bits, s);
    case Scheme::logarithmic: {
        // {0} plus +-s*2^-k, k = 0 .. 2^(b-1)-2; top level is s itself
        std::vector<double> pos;
        for (int64_t k = 0; k <= q - 1; k++) pos.push_back(std::ldexp(s, static_cast<int>(-k)));
        std::sort(pos.begin(), pos.end());
        for (auto it = pos.rbegin(); it != pos.rend(); ++it) g.levels.push_back(-*it);
        g.levels.push_back(0.0);
        for (double v : pos) g.levels.push_back(v);
        g.zero_index = q;
        break;
    }
    case Scheme::floatgrid: {
        FloatLayout fl =
            params.float_layout_set ? params.float_layout : default_float_layout(bits);
        require(1 + fl.exponent_bits + fl.mantissa_bits == bits,
                "float layout does not add up to the bit-width");
        g.levels = float_levels_unscaled(fl);
        for (double& v : g.levels) v *= s;
        break;
    }
    case Scheme::power: {
        // Uniform index range pushed through the power transform, scaled so
        // the extreme level is s*q (reduces to the uniform grid at a = 1).
        double a = params.power_exponent;
        require(a > 0.0, "power exponent must be positive");
        double top = s * static_cast<double>(q);
        for (int64_t k = -q; k <= q; k++) {
            double t = static_cast<double>(std::llabs(k)) / static_cast<double>(q);
            double mag = top * std::pow(t, a);
            g.levels.push_back(k < 0 ? -mag : (k == 0 ? 0.0 : mag));
        }
        g.zero_index = q;
        break;
    }
    }
    if (params.scheme == Scheme::floatgrid) {
        auto it = std::lower_bound(g.levels.begin(), g.levels.end(), 0.0);
        require(it != g.levels.end() && *it == 0.0, "float grid lost its zero level");
        g.zero_index = it - g.levels.begin();
    }
    for (size_t i = 1; i < g.levels.size(); i++)
        require(g.levels[i] > g.levels[i - 1], "grid levels not strictly increasing");
    return g;
}

double to_index(const Grid& g, double x) {
    const std::vector<double>& lv = g.levels;
    int64_t n = g.count();
    if (x <= lv.front()) return 0.0;
    if (x >= lv.back()) return static_cast<double>(n - 1);
    // segment k such that lv[k] <= x < lv[k+1]
    auto it = std::upper_bound(lv.begin(), lv.end(), x);
    int64_t k = (it - lv.begin()) - 1;
    double lo = lv[static_cast<size_t>(k)], hi = lv[static_cast<size_t>(k + 1)];
    return static_cast<double>(k) + (x - lo) / (hi - lo);
}

double from_index(const Grid& g, double k) {
    const std::vector<double>& lv = g.levels;
    int64_t n = g.count();
    if (k <= 0.0) return lv.front();
    if (k >= static_cast<double>(n - 1)) return lv.back();
    double fk = std::floor(k);
    int64_t i = static_cast<int64_t>(fk);
    double f = k - fk;
    if (f == 0.0) return lv[static_cast<size_t>(i)];
    return lv[static_cast<size_t>(i)] + f * (lv[static_cast<size_t>(i + 1)] - lv[static_cast<size_t>(i)]);
}

double from_index_deriv(const Grid& g, double k) {
    int64_t n = g.count();
    if (k < 0.0 || k > static_cast<double>(n - 1)) return 0.0;
    int64_t i = static_cast<int64_t>(std::floor(k));
    if (i >= n - 1) i = n - 2; // at the top node use the inner segment
    if (i < 0) i = 0;
    return g.levels[static_cast<size_t>(i + 1)] - g.levels[static_cast<size_t>(i)];
}

double hard_round_index(const Grid& g, double k) {
    int64_t n = g.count();
    double z = static_cast<double>(g.zero_index);
    // nearest integer with ties away from the zero level
    double r = z + std::round(k - z); // std::round ties away from zero
    if (r < 0.0) r = 0.0;
    if (r > static_cast<double>(n - 1)) r = static_cast<double>(n - 1);
    return r;
}

double soft_round(double k, double beta) {
    require(beta > 0.0, "soft_round: beta must be positive");
    double fk = std::floor(k);
    double f = k - fk;
    double t = std::tanh(2.0 * beta * (f - 0.5)) / std::tanh(beta);
    return fk + 0.5 * (1.0 + t);
}

double soft_round_deriv(double k, double beta) {
    double f = k - std::floor(k);
    double c = std::cosh(2.0 * beta * (f - 0.5));
    double sech2 = 1.0 / (c * c);
    return beta * sech2 / std::tanh(beta);
}

double quantize_dequantize(const Grid& g, double x) {
    return from_index(g, hard_round_index(g, to_index(g, x)));
}

double quantize_dequantize_soft(const Grid& g, double x, double beta) {
    return from_index(g, soft_round(to_index(g, x), beta));
}

double default_beta(Scheme s) {
    switch (s) {
    case Scheme::power: return 20.0;
    case Scheme::floatgrid: return 30.0;
    case Scheme::logarithmic: return 50.0;
    default: return 50.0;
    }
}

std::string dump_grid(const Grid& g) {
    std::ostringstream os;
    os.precision(17);
    for (double v : g.levels) os << v << "\n";
    return os.str();
}

} // namespace gptq
