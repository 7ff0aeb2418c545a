#include "gptq/intsim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gptq {

RequantParams derive_requant(double s_w, double s_x, double s_y) {
    require(s_w > 0.0 && s_x > 0.0 && s_y > 0.0, "requant scales must be positive");
    double ratio = s_w * s_x / s_y;
    require(ratio < 2147483648.0, "requant ratio must stay below 2^31");
    const double tol = std::ldexp(1.0, -30);
    for (int e = 0; e < 63; e++) {
        double scaled = std::ldexp(ratio, e);
        double m = std::round(scaled);
        if (m >= 2147483648.0) break;
        if (m <= 0.0) continue;
        double realized = std::ldexp(m, -e);
        if (std::fabs(realized - ratio) / ratio <= tol) {
            int64_t mi = static_cast<int64_t>(m);
            int ei = e;
            while (ei > 0 && (mi & 1) == 0) {
                mi >>= 1;
                ei--;
            }
            return {mi, ei};
        }
    }
    throw Error("no multiplier/shift pair reaches the requested precision");
}

IntTensor::IntTensor(std::vector<int64_t> s) : shape(std::move(s)) {
    int64_t n = 1;
    for (int64_t d : shape) {
        require(d > 0, "integer tensor dims must be positive");
        n *= d;
    }
    data.assign(static_cast<size_t>(n), 0);
}

IntTensor::IntTensor(std::vector<int64_t> s, std::vector<int64_t> d)
    : shape(std::move(s)), data(std::move(d)) {
    int64_t n = 1;
    for (int64_t dd : shape) n *= dd;
    require(static_cast<int64_t>(data.size()) == n, "integer tensor size mismatch");
}

namespace {

int64_t rshift_round_half_up(__int128 v, int e) {
    if (e == 0) return static_cast<int64_t>(v);
    __int128 half = static_cast<__int128>(1) << (e - 1);
    return static_cast<int64_t>((v + half) >> e);
}

} // namespace

IntTensor integer_layer_forward(const IntTensor& w, const IntTensor& x, const RequantParams& rq,
                                const IntTensor* mask, int out_bits) {
    require(w.shape.size() == 2, "integer layer weights must be 2-d");
    require(out_bits >= 2 && out_bits <= 32, "out_bits out of range");
    int64_t out_f = w.shape[0], in_f = w.shape[1];
    bool single = x.shape.size() == 1;
    require(single ? x.shape[0] == in_f : (x.shape.size() == 2 && x.shape[1] == in_f),
            "integer layer input shape mismatch");
    int64_t batch = single ? 1 : x.shape[0];
    IntTensor y(single ? std::vector<int64_t>{out_f} : std::vector<int64_t>{batch, out_f});
    if (mask) {
        require(mask->shape == y.shape, "activation mask shape mismatch");
        for (int64_t v : mask->data)
            require(v == 0 || v == 1, "activation mask entries must be binary");
    }
    const int64_t acc_limit = int64_t(1) << 62;
    int64_t clamp_hi = (int64_t(1) << (out_bits - 1)) - 1;
    int64_t clamp_lo = -clamp_hi;
    for (int64_t b = 0; b < batch; b++)
        for (int64_t o = 0; o < out_f; o++) {
            __int128 acc = 0;
            const int64_t* wr = w.data.data() + o * in_f;
            const int64_t* xr = x.data.data() + b * in_f;
            for (int64_t i = 0; i < in_f; i++) {
                acc += static_cast<__int128>(wr[i]) * xr[i];
                require(acc < acc_limit && acc > -acc_limit,
                        "integer accumulator overflow beyond 63 bits");
            }
            int64_t code = rshift_round_half_up(acc * rq.multiplier, rq.shift);
            if (mask) code += (*mask)[b * out_f + o];
            code = std::clamp(code, clamp_lo, clamp_hi);
            y[b * out_f + o] = code;
        }
    return y;
}

ErrorDecomposition error_decomposition(double w, double x) {
    ErrorDecomposition d;
    double fw = std::floor(w), fx = std::floor(x);
    double ew = w - fw, ex = x - fx;
    d.term_w = ew * fx;
    d.term_x = fw * ex;
    d.term_cross = ew * ex;
    d.total = d.term_w + d.term_x + d.term_cross;
    return d;
}

ErrorDecompositionT error_decomposition(const Tensor& w, const Tensor& x) {
    require(w.same_shape(x), "error_decomposition: tensor shapes differ");
    ErrorDecompositionT d{Tensor(w.shape), Tensor(w.shape), Tensor(w.shape), Tensor(w.shape)};
    for (int64_t i = 0; i < w.numel(); i++) {
        ErrorDecomposition s = error_decomposition(w[i], x[i]);
        d.term_w[i] = s.term_w;
        d.term_x[i] = s.term_x;
        d.term_cross[i] = s.term_cross;
        d.total[i] = s.total;
    }
    return d;
}

namespace {

// sorted-descending |offset| profile; smaller lexicographic profile wins ties
std::vector<int64_t> offset_profile(const std::vector<int64_t>& offsets) {
    std::vector<int64_t> p;
    p.reserve(offsets.size());
    for (int64_t o : offsets) p.push_back(std::llabs(o));
    std::sort(p.begin(), p.end(), std::greater<int64_t>());
    return p;
}

} // namespace

OracleResult exhaustive_rounding_oracle(const std::vector<std::vector<double>>& candidates,
                                        const std::vector<std::vector<int64_t>>& floor_offsets,
                                        const std::vector<double>& x, double target) {
    size_t nw = candidates.size();
    require(nw > 0 && floor_offsets.size() == nw && x.size() == nw,
            "oracle: inconsistent inputs");
    int64_t total = 1;
    for (size_t i = 0; i < nw; i++) {
        require(!candidates[i].empty() && candidates[i].size() == floor_offsets[i].size(),
                "oracle: candidate list mismatch");
        total *= static_cast<int64_t>(candidates[i].size());
        require(total <= 1000000, "oracle: " + std::to_string(total) +
                                      " candidate assignments exceed the 10^6 guard");
    }
    OracleResult best;
    best.abs_error = std::numeric_limits<double>::infinity();
    std::vector<int64_t> idx(nw, 0);
    std::vector<int64_t> offs(nw, 0);
    OracleResult cur;
    int64_t count = 0;
    while (true) {
        double value = 0.0;
        for (size_t i = 0; i < nw; i++)
            value += candidates[i][static_cast<size_t>(idx[i])] * x[i];
        double err = std::fabs(value - target);
        count++;
        bool better = false;
        if (err < best.abs_error) {
            better = true;
        } else if (err == best.abs_error) {
            for (size_t i = 0; i < nw; i++) offs[i] = floor_offsets[i][static_cast<size_t>(idx[i])];
            std::vector<int64_t> ap = offset_profile(offs);
            std::vector<int64_t> bp = offset_profile(best.offsets);
            if (ap < bp) better = true;
            // equal profiles: keep the first (lexicographically smallest positions)
        }
        if (better) {
            best.choice = idx;
            best.levels.clear();
            best.offsets.clear();
            for (size_t i = 0; i < nw; i++) {
                best.levels.push_back(candidates[i][static_cast<size_t>(idx[i])]);
                best.offsets.push_back(floor_offsets[i][static_cast<size_t>(idx[i])]);
            }
            best.value = value;
            best.abs_error = err;
        }
        // odometer increment, last weight fastest
        size_t pos = nw;
        while (pos > 0) {
            pos--;
            if (++idx[pos] < static_cast<int64_t>(candidates[pos].size())) break;
            idx[pos] = 0;
            if (pos == 0) {
                best.enumerated = count;
                return best;
            }
        }
    }
}

OracleResult oracle_uniform(const std::vector<double>& w, const std::vector<double>& x,
                            const std::vector<int64_t>& offsets, double scale, double target) {
    std::vector<std::vector<double>> cands(w.size());
    std::vector<std::vector<int64_t>> offs(w.size());
    for (size_t i = 0; i < w.size(); i++) {
        double fl = std::floor(w[i] / scale);
        for (int64_t o : offsets) {
            cands[i].push_back((fl + static_cast<double>(o)) * scale);
            offs[i].push_back(o);
        }
    }
    return exhaustive_rounding_oracle(cands, offs, x, target);
}

} // namespace gptq
