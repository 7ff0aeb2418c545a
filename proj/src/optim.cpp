#include "gptq/optim.hpp"

#include <cmath>

namespace gptq {

const char* opt_kind_name(OptKind k) {
    switch (k) {
    case OptKind::sgd: return "sgd";
    case OptKind::nesterov: return "nesterov";
    case OptKind::adam: return "adam";
    case OptKind::adamw: return "adamw";
    case OptKind::adamax: return "adamax";
    case OptKind::adagrad: return "adagrad";
    case OptKind::adadelta: return "adadelta";
    case OptKind::rmsprop: return "rmsprop";
    }
    return "?";
}

OptKind opt_kind_from_string(const std::string& s) {
    if (s == "sgd") return OptKind::sgd;
    if (s == "nesterov") return OptKind::nesterov;
    if (s == "adam") return OptKind::adam;
    if (s == "adamw") return OptKind::adamw;
    if (s == "adamax") return OptKind::adamax;
    if (s == "adagrad") return OptKind::adagrad;
    if (s == "adadelta") return OptKind::adadelta;
    if (s == "rmsprop") return OptKind::rmsprop;
    throw Error("unknown optimizer '" + s +
                "' (expected sgd|nesterov|adam|adamw|adamax|adagrad|adadelta|rmsprop)");
}

OptHyper default_hyper(OptKind kind) {
    OptHyper h;
    switch (kind) {
    case OptKind::sgd:
    case OptKind::nesterov: h.lr = 1e-2; break;
    case OptKind::adagrad: h.lr = 1e-1; break;
    case OptKind::adadelta: h.lr = 1.0; break;
    case OptKind::adamw:
        h.lr = 1e-3;
        h.weight_decay = 1e-2;
        break;
    default: h.lr = 1e-3; break;
    }
    return h;
}

Optimizer::Optimizer(OptKind kind, int64_t param_count, OptHyper hyper)
    : kind_(kind), hyper_(hyper), n_(param_count) {
    require(param_count > 0, "optimizer needs at least one parameter");
    OptHyper def = default_hyper(kind);
    if (hyper_.lr == 0.0) hyper_.lr = def.lr;
    if (kind == OptKind::adamw && hyper.weight_decay == 0.0)
        hyper_.weight_decay = def.weight_decay;
    require(hyper_.lr > 0.0, "learning rate must be positive");
    size_t n = static_cast<size_t>(n_);
    switch (kind_) {
    case OptKind::sgd:
    case OptKind::nesterov: buf_.assign(n, 0.0); break;
    case OptKind::adam:
    case OptKind::adamw:
        m_.assign(n, 0.0);
        v_.assign(n, 0.0);
        break;
    case OptKind::adamax:
        m_.assign(n, 0.0);
        u_.assign(n, 0.0);
        break;
    case OptKind::adagrad: gsq_.assign(n, 0.0); break;
    case OptKind::adadelta:
        v_.assign(n, 0.0); // running squared-gradient average
        dacc_.assign(n, 0.0);
        break;
    case OptKind::rmsprop: v_.assign(n, 0.0); break;
    }
}

void Optimizer::step(std::vector<double>& params, const std::vector<double>& grads) {
    require(static_cast<int64_t>(params.size()) == n_ &&
                static_cast<int64_t>(grads.size()) == n_,
            "optimizer step: parameter/gradient size mismatch");
    for (double g : grads)
        if (!std::isfinite(g)) {
            skipped_++;
            return;
        }
    t_++;
    const double lr = hyper_.lr, b1 = hyper_.beta1, b2 = hyper_.beta2, eps = hyper_.eps;
    size_t n = static_cast<size_t>(n_);
    switch (kind_) {
    case OptKind::sgd:
        for (size_t i = 0; i < n; i++) {
            buf_[i] = hyper_.momentum * buf_[i] + grads[i];
            params[i] -= lr * buf_[i];
        }
        break;
    case OptKind::nesterov:
        for (size_t i = 0; i < n; i++) {
            buf_[i] = hyper_.momentum * buf_[i] + grads[i];
            params[i] -= lr * (grads[i] + hyper_.momentum * buf_[i]);
        }
        break;
    case OptKind::adamw:
        for (size_t i = 0; i < n; i++) params[i] -= lr * hyper_.weight_decay * params[i];
        [[fallthrough]];
    case OptKind::adam: {
        double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
        double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
        for (size_t i = 0; i < n; i++) {
            m_[i] = b1 * m_[i] + (1.0 - b1) * grads[i];
            v_[i] = b2 * v_[i] + (1.0 - b2) * grads[i] * grads[i];
            params[i] -= lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps);
        }
        break;
    }
    case OptKind::adamax: {
        double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
        for (size_t i = 0; i < n; i++) {
            m_[i] = b1 * m_[i] + (1.0 - b1) * grads[i];
            u_[i] = std::max(b2 * u_[i], std::fabs(grads[i]));
            params[i] -= lr * (m_[i] / c1) / (u_[i] + eps);
        }
        break;
    }
    case OptKind::adagrad:
        for (size_t i = 0; i < n; i++) {
            gsq_[i] += grads[i] * grads[i];
            params[i] -= lr * grads[i] / (std::sqrt(gsq_[i]) + eps);
        }
        break;
    case OptKind::adadelta: {
        double rho = hyper_.adadelta_rho;
        for (size_t i = 0; i < n; i++) {
            v_[i] = rho * v_[i] + (1.0 - rho) * grads[i] * grads[i];
            double d = grads[i] * std::sqrt(dacc_[i] + eps) / std::sqrt(v_[i] + eps);
            dacc_[i] = rho * dacc_[i] + (1.0 - rho) * d * d;
            params[i] -= lr * d;
        }
        break;
    }
    case OptKind::rmsprop: {
        double a = hyper_.rmsprop_alpha;
        for (size_t i = 0; i < n; i++) {
            v_[i] = a * v_[i] + (1.0 - a) * grads[i] * grads[i];
            params[i] -= lr * grads[i] / (std::sqrt(v_[i]) + eps);
        }
        break;
    }
    }
}

} // namespace gptq
