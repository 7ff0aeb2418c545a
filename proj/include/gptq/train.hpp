// Minimal full-precision trainer used to produce classification fixtures for
// the quantization experiments. Deterministic given the seed.

#pragma once

#include "gptq/calib.hpp"
#include "gptq/network.hpp"

#include <cstdint>

namespace gptq {

/// Small MLP: linear(+relu) stacks ending in a linear head. One block per
/// weighted layer.
NetworkRecord make_mlp_fixture(int in_dim, const std::vector<int>& hidden, int classes,
                               uint64_t seed);

/// Small CNN for (1, 8, 8) inputs: two fused-relu convs, global average pool,
/// flatten, linear head. Three blocks.
NetworkRecord make_cnn_fixture(int classes, uint64_t seed);

struct TrainResult {
    NetworkRecord net;
    double final_accuracy = 0.0;
    int epochs_run = 0;
    bool diverged = false;
};

/// Softmax cross-entropy training with Adam. epochs == 0 returns the net
/// unchanged; a non-finite loss aborts reporting the last finite epoch.
TrainResult train_toy(const NetworkRecord& init, const CalibrationSet& dataset, int epochs,
                      uint64_t seed, int batch_size = 32, double lr = 5e-3);

/// Top-1 accuracy of a full-precision network on a labeled set.
double top1_accuracy(const NetworkRecord& net, const CalibrationSet& dataset);

} // namespace gptq
