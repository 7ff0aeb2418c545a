// Model persistence: a directory holding a human-readable manifest plus one
// binary blob per tensor (64-bit little-endian reals, row-major). Round trips
// are bit-exact, including quantization metadata on quantized models.

#pragma once

#include "gptq/codec.hpp"
#include "gptq/network.hpp"

#include <filesystem>
#include <vector>

namespace gptq {

void write_f64_blob(const std::filesystem::path& file, const Tensor& t);
Tensor read_f64_blob(const std::filesystem::path& file, const std::vector<int64_t>& shape);

struct LoadedModel {
    NetworkRecord net;
    std::vector<LayerQuantMeta> quant; // one per layer; all-default if not quantized
    bool quantized = false;
};

void save_model(const std::filesystem::path& dir, const NetworkRecord& net,
                const std::vector<LayerQuantMeta>* quant = nullptr);
LoadedModel load_model(const std::filesystem::path& dir);

} // namespace gptq
