// First-order optimizer zoo with fixed default hyperparameters. One state per
// learnable tensor; updates are elementwise and independent of iteration
// order, so stepping is deterministic.

#pragma once

#include "gptq/tensor.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace gptq {

enum class OptKind { sgd, nesterov, adam, adamw, adamax, adagrad, adadelta, rmsprop };

const char* opt_kind_name(OptKind k);
OptKind opt_kind_from_string(const std::string& s); // throws listing the valid kinds

struct OptHyper {
    double lr = 0.0; // 0 = use the kind's default
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double momentum = 0.9;
    double weight_decay = 0.0; // adamw defaults to 1e-2
    double rmsprop_alpha = 0.99;
    double adadelta_rho = 0.9;
};

/// The pinned defaults per kind: lr 1e-3 for adam/adamw/adamax/rmsprop,
/// 1e-2 for sgd/nesterov, 1e-1 for adagrad and 1.0 for adadelta (their
/// reference values; smaller rates stall on even a 1-d quadratic).
OptHyper default_hyper(OptKind kind);

class Optimizer {
  public:
    Optimizer(OptKind kind, int64_t param_count, OptHyper hyper = {});

    /// One update step. A non-finite gradient anywhere skips the whole step
    /// and counts the incident.
    void step(std::vector<double>& params, const std::vector<double>& grads);

    OptKind kind() const { return kind_; }
    const OptHyper& hyper() const { return hyper_; }
    int64_t steps_taken() const { return t_; }
    int64_t skipped_steps() const { return skipped_; }

    // accumulators (empty when the kind does not use them)
    const std::vector<double>& first_moment() const { return m_; }
    const std::vector<double>& second_moment() const { return v_; }
    const std::vector<double>& inf_norm_acc() const { return u_; }
    const std::vector<double>& grad_sq_sum() const { return gsq_; }
    const std::vector<double>& delta_acc() const { return dacc_; }
    const std::vector<double>& momentum_buf() const { return buf_; }

  private:
    OptKind kind_;
    OptHyper hyper_;
    int64_t n_;
    int64_t t_ = 0;
    int64_t skipped_ = 0;
    std::vector<double> m_, v_, u_, gsq_, dacc_, buf_;
};

} // namespace gptq
