#include "gptq/tensor.hpp"

#include <cmath>
#include <sstream>

namespace gptq {

bool Tensor::all_finite() const {
    for (double v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << "(";
    for (size_t i = 0; i < shape.size(); i++) {
        if (i) os << ",";
        os << shape[i];
    }
    os << ")";
    return os.str();
}

double max_abs(const Tensor& t) {
    double m = 0.0;
    for (double v : t.data) {
        double a = std::fabs(v);
        if (a > m) m = a;
    }
    return m;
}

double max_abs_range(const Tensor& t, int64_t begin, int64_t end) {
    double m = 0.0;
    for (int64_t i = begin; i < end; i++) {
        double a = std::fabs(t[i]);
        if (a > m) m = a;
    }
    return m;
}

Tensor stack(const std::vector<const Tensor*>& samples) {
    require(!samples.empty(), "stack: no samples");
    const Tensor& first = *samples[0];
    std::vector<int64_t> shape;
    shape.push_back(static_cast<int64_t>(samples.size()));
    for (int64_t d : first.shape) shape.push_back(d);
    Tensor out(shape);
    int64_t per = first.numel();
    for (size_t i = 0; i < samples.size(); i++) {
        require(samples[i]->shape == first.shape, "stack: sample shape mismatch");
        std::copy(samples[i]->data.begin(), samples[i]->data.end(),
                  out.data.begin() + static_cast<int64_t>(i) * per);
    }
    return out;
}

Tensor gather_rows(const Tensor& batched, const std::vector<int64_t>& rows) {
    require(batched.rank() >= 1, "gather_rows: need a batch axis");
    int64_t per = batched.numel() / batched.shape[0];
    std::vector<int64_t> shape = batched.shape;
    shape[0] = static_cast<int64_t>(rows.size());
    Tensor out(shape);
    for (size_t i = 0; i < rows.size(); i++) {
        int64_t r = rows[i];
        require(r >= 0 && r < batched.shape[0], "gather_rows: row out of range");
        std::copy(batched.data.begin() + r * per, batched.data.begin() + (r + 1) * per,
                  out.data.begin() + static_cast<int64_t>(i) * per);
    }
    return out;
}

Tensor slice_rows(const Tensor& batched, int64_t begin, int64_t end) {
    require(batched.rank() >= 1 && begin >= 0 && end <= batched.shape[0] && begin < end,
            "slice_rows: bad range");
    int64_t per = batched.numel() / batched.shape[0];
    std::vector<int64_t> shape = batched.shape;
    shape[0] = end - begin;
    Tensor out(shape);
    std::copy(batched.data.begin() + begin * per, batched.data.begin() + end * per,
              out.data.begin());
    return out;
}

} // namespace gptq
