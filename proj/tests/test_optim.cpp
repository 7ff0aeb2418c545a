#include "gptq/optim.hpp"
#include "gptq/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace gptq;

namespace {

const OptKind kAllKinds[] = {OptKind::sgd,    OptKind::nesterov, OptKind::adam,
                             OptKind::adamw,  OptKind::adamax,   OptKind::adagrad,
                             OptKind::adadelta, OptKind::rmsprop};

} // namespace

TEST_SUITE("optim") {

TEST_CASE("fresh adam state is zeroed") {
    Optimizer opt(OptKind::adam, 3);
    CHECK(opt.steps_taken() == 0);
    for (double v : opt.first_moment()) CHECK(v == 0.0);
    for (double v : opt.second_moment()) CHECK(v == 0.0);
    CHECK(opt.first_moment().size() == 3);
}

TEST_CASE("adamax keeps an infinity-norm accumulator instead of a second moment") {
    Optimizer opt(OptKind::adamax, 2);
    CHECK(opt.inf_norm_acc().size() == 2);
    CHECK(opt.second_moment().empty());
}

TEST_CASE("unknown kind is rejected with the valid list") {
    try {
        opt_kind_from_string("lion");
        CHECK(false);
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("adamax") != std::string::npos);
    }
}

TEST_CASE("sgd first step") {
    OptHyper h;
    h.lr = 0.1;
    Optimizer opt(OptKind::sgd, 1, h);
    std::vector<double> p = {1.0};
    opt.step(p, {1.0});
    CHECK(p[0] == doctest::Approx(0.9).epsilon(1e-15));
}

TEST_CASE("adam first step magnitude is the learning rate") {
    Optimizer opt(OptKind::adam, 1);
    std::vector<double> p = {1.0};
    opt.step(p, {0.5});
    // bias corrections cancel at t = 1, so the update is lr * g / (|g| + eps)
    CHECK(std::fabs(1.0 - p[0]) == doctest::Approx(1e-3).epsilon(1e-6));
}

TEST_CASE("adamax first step is a signed learning-rate step") {
    Optimizer opt(OptKind::adamax, 1);
    std::vector<double> p = {1.0};
    opt.step(p, {-0.5});
    // u = |g| at t = 1, so the update is -lr * sign(g)
    CHECK(p[0] == doctest::Approx(1.0 + 1e-3).epsilon(1e-6));
}

TEST_CASE("zero gradients never move parameters") {
    for (OptKind kind : kAllKinds) {
        if (kind == OptKind::adamw) continue; // decay acts; covered below
        Optimizer opt(kind, 2);
        std::vector<double> p = {1.5, -2.5};
        for (int t = 0; t < 50; t++) opt.step(p, {0.0, 0.0});
        CHECK(p[0] == 1.5);
        CHECK(p[1] == -2.5);
    }
}

TEST_CASE("adamw with zero gradients applies exactly the decoupled decay") {
    Optimizer opt(OptKind::adamw, 1);
    double lr = opt.hyper().lr, wd = opt.hyper().weight_decay;
    CHECK(wd == 1e-2);
    std::vector<double> p = {2.0};
    double expect = 2.0;
    for (int t = 0; t < 20; t++) {
        opt.step(p, {0.0});
        expect -= lr * wd * expect;
        CHECK(p[0] == expect);
    }
}

TEST_CASE("every kind minimizes a 1-d quadratic at its default rate") {
    for (OptKind kind : kAllKinds) {
        Optimizer opt(kind, 1);
        std::vector<double> p = {1.0};
        for (int t = 0; t < 2000; t++) opt.step(p, {2.0 * p[0]});
        INFO("kind ", opt_kind_name(kind), " ended at f = ", p[0] * p[0]);
        CHECK(p[0] * p[0] < 1e-2);
    }
}

TEST_CASE("non-finite gradients skip the step and count the incident") {
    Optimizer opt(OptKind::adam, 2);
    std::vector<double> p = {1.0, 2.0};
    opt.step(p, {0.1, std::nan("")});
    CHECK(p[0] == 1.0);
    CHECK(p[1] == 2.0);
    CHECK(opt.skipped_steps() == 1);
    CHECK(opt.steps_taken() == 0);
    opt.step(p, {0.1, 0.1});
    CHECK(opt.steps_taken() == 1);
    CHECK(p[0] != 1.0);
}

TEST_CASE("updates are elementwise and order-independent") {
    Rng rng(23, 0);
    std::vector<double> p0(16), g0(16);
    for (int i = 0; i < 16; i++) {
        p0[static_cast<size_t>(i)] = rng.next_gaussian();
        g0[static_cast<size_t>(i)] = rng.next_gaussian();
    }
    for (OptKind kind : kAllKinds) {
        Optimizer a(kind, 16), b(kind, 16);
        std::vector<double> pa = p0, pb = p0;
        std::vector<double> pr(16), gr(16);
        // permuted copy: reversed order
        for (int i = 0; i < 16; i++) {
            pr[static_cast<size_t>(i)] = p0[static_cast<size_t>(15 - i)];
            gr[static_cast<size_t>(i)] = g0[static_cast<size_t>(15 - i)];
        }
        for (int t = 0; t < 5; t++) {
            a.step(pa, g0);
            b.step(pr, gr);
        }
        for (int i = 0; i < 16; i++)
            CHECK(pa[static_cast<size_t>(i)] == pr[static_cast<size_t>(15 - i)]);
        (void)pb;
    }
}

TEST_CASE("documented defaults") {
    CHECK(default_hyper(OptKind::adam).lr == 1e-3);
    CHECK(default_hyper(OptKind::adamax).lr == 1e-3);
    CHECK(default_hyper(OptKind::rmsprop).lr == 1e-3);
    CHECK(default_hyper(OptKind::sgd).lr == 1e-2);
    CHECK(default_hyper(OptKind::nesterov).lr == 1e-2);
    CHECK(default_hyper(OptKind::adagrad).lr == 1e-1);
    CHECK(default_hyper(OptKind::adadelta).lr == 1.0);
    OptHyper h = default_hyper(OptKind::adam);
    CHECK(h.beta1 == 0.9);
    CHECK(h.beta2 == 0.999);
    CHECK(h.eps == 1e-8);
    CHECK(h.momentum == 0.9);
    CHECK(h.rmsprop_alpha == 0.99);
    CHECK(h.adadelta_rho == 0.9);
}

} // TEST_SUITE
