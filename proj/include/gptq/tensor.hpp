// Dense row-major tensor of 64-bit reals. All network math in this project
// runs on these; reductions are performed in fixed left-to-right order so
// repeated runs are bit-identical.

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace gptq {

class Error : public std::runtime_error {
  public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw Error(msg);
}

struct Tensor {
    std::vector<int64_t> shape;
    std::vector<double> data; // row-major, size == product(shape)

    Tensor() = default;

    explicit Tensor(std::vector<int64_t> s) : shape(std::move(s)) {
        data.assign(static_cast<size_t>(numel_of(shape)), 0.0);
    }

    Tensor(std::vector<int64_t> s, std::vector<double> d)
        : shape(std::move(s)), data(std::move(d)) {
        require(static_cast<int64_t>(data.size()) == numel_of(shape),
                "tensor data length does not match shape");
    }

    static int64_t numel_of(const std::vector<int64_t>& s) {
        int64_t n = 1;
        for (int64_t d : s) {
            require(d > 0, "tensor dimensions must be positive");
            n *= d;
        }
        return n;
    }

    static Tensor full(std::vector<int64_t> s, double v) {
        Tensor t(std::move(s));
        for (double& x : t.data) x = v;
        return t;
    }

    int64_t numel() const { return static_cast<int64_t>(data.size()); }
    int rank() const { return static_cast<int>(shape.size()); }
    int64_t dim(int i) const { return shape[static_cast<size_t>(i)]; }
    bool empty() const { return data.empty(); }

    double operator[](int64_t i) const { return data[static_cast<size_t>(i)]; }
    double& operator[](int64_t i) { return data[static_cast<size_t>(i)]; }

    double& at2(int64_t i, int64_t j) { return data[static_cast<size_t>(i * shape[1] + j)]; }
    double at2(int64_t i, int64_t j) const { return data[static_cast<size_t>(i * shape[1] + j)]; }

    double& at4(int64_t a, int64_t b, int64_t c, int64_t d) {
        return data[static_cast<size_t>(((a * shape[1] + b) * shape[2] + c) * shape[3] + d)];
    }
    double at4(int64_t a, int64_t b, int64_t c, int64_t d) const {
        return data[static_cast<size_t>(((a * shape[1] + b) * shape[2] + c) * shape[3] + d)];
    }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    bool all_finite() const;

    std::string shape_str() const;
};

double max_abs(const Tensor& t);
double max_abs_range(const Tensor& t, int64_t begin, int64_t end);

/// Stack n same-shape sample tensors into one tensor with a leading batch axis.
Tensor stack(const std::vector<const Tensor*>& samples);

/// Gather rows (leading-axis slices) of a batched tensor.
Tensor gather_rows(const Tensor& batched, const std::vector<int64_t>& rows);

/// Slice rows [begin, end) of a batched tensor.
Tensor slice_rows(const Tensor& batched, int64_t begin, int64_t end);

} // namespace gptq
