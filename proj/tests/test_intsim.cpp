#include "gptq/codec.hpp"
#include "gptq/intsim.hpp"
#include "gptq/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace gptq;

TEST_SUITE("intsim") {

TEST_CASE("dyadic ratios are represented exactly") {
    RequantParams rq = derive_requant(0.75, 0.5, 1.0); // 0.375 = 3 * 2^-3
    CHECK(rq.multiplier == 3);
    CHECK(rq.shift == 3);
    rq = derive_requant(1.0, 1.0, 1.0);
    CHECK(rq.multiplier == 1);
    CHECK(rq.shift == 0);
}

TEST_CASE("one third is approximated within 2^-30") {
    RequantParams rq = derive_requant(1.0, 1.0, 3.0);
    double realized = std::ldexp(static_cast<double>(rq.multiplier), -rq.shift);
    CHECK(std::fabs(realized - 1.0 / 3.0) * 3.0 <= std::ldexp(1.0, -30));
    CHECK(rq.multiplier < (int64_t(1) << 31));
    CHECK(rq.multiplier % 2 == 1);
}

TEST_CASE("canonical form: odd multiplier unless shift is zero") {
    Rng rng(31, 0);
    for (int t = 0; t < 200; t++) {
        double ratio = std::exp(rng.next_uniform(-6.0, 6.0));
        RequantParams rq = derive_requant(ratio, 1.0, 1.0);
        CHECK((rq.shift == 0 || rq.multiplier % 2 == 1));
        double realized = std::ldexp(static_cast<double>(rq.multiplier), -rq.shift);
        CHECK(std::fabs(realized - ratio) / ratio <= std::ldexp(1.0, -30));
    }
}

TEST_CASE("oversized ratios are rejected") {
    CHECK_THROWS(derive_requant(65536.0, 65536.0, 1.0)); // 2^32
}

TEST_CASE("plain integer matmul when M=1, e=0 and the mask is zero") {
    IntTensor w({2, 2}, {1, 2, 3, 4});
    IntTensor x({2}, {5, -6});
    IntTensor mask({2}, {0, 0});
    IntTensor y = integer_layer_forward(w, x, {1, 0}, &mask, 16);
    CHECK(y[0] == 5 - 12);
    CHECK(y[1] == 15 - 24);
}

TEST_CASE("a mask entry shifts its output code by exactly one") {
    IntTensor w({2, 3}, {1, -2, 3, 0, 4, -1});
    IntTensor x({3}, {7, 2, -5});
    IntTensor zero({2}, {0, 0});
    IntTensor one({2}, {0, 1});
    RequantParams rq = derive_requant(0.5, 0.25, 1.0);
    IntTensor a = integer_layer_forward(w, x, rq, &zero, 8);
    IntTensor b = integer_layer_forward(w, x, rq, &one, 8);
    CHECK(b[0] == a[0]);
    CHECK(b[1] == a[1] + 1);
}

TEST_CASE("mask entries must be binary") {
    IntTensor w({1, 1}, {1});
    IntTensor x({1}, {1});
    IntTensor bad({1}, {2});
    CHECK_THROWS(integer_layer_forward(w, x, {1, 0}, &bad, 8));
}

TEST_CASE("requantized output clamps to the symmetric output range") {
    IntTensor w({1, 1}, {100});
    IntTensor x({1}, {100});
    IntTensor y = integer_layer_forward(w, x, {1, 0}, nullptr, 4);
    CHECK(y[0] == 7);
}

TEST_CASE("right shift rounds half up") {
    IntTensor w({1, 1}, {3});
    IntTensor x({1}, {1});
    // 3 * 1 = 3, times M=1 shifted by 1: 1.5 rounds up to 2
    IntTensor y = integer_layer_forward(w, x, {1, 1}, nullptr, 8);
    CHECK(y[0] == 2);
    IntTensor wn({1, 1}, {-3});
    y = integer_layer_forward(wn, x, {1, 1}, nullptr, 8);
    CHECK(y[0] == -1); // -1.5 rounds toward positive infinity
}

TEST_CASE("accumulator overflow is rejected") {
    IntTensor w({1, 2}, {int64_t(1) << 32, int64_t(1) << 32});
    IntTensor x({2}, {int64_t(1) << 31, int64_t(1) << 31});
    CHECK_THROWS(integer_layer_forward(w, x, {1, 0}, nullptr, 16));
}

TEST_CASE("integer pipeline matches the float simulation on dyadic scales") {
    Rng rng(101, 0);
    for (int t = 0; t < 30; t++) {
        int64_t out_f = 1 + static_cast<int64_t>(rng.next_below(4));
        int64_t in_f = 1 + static_cast<int64_t>(rng.next_below(6));
        double s_w = std::ldexp(1.0, static_cast<int>(rng.next_below(5)) - 3);
        double s_x = std::ldexp(1.0, static_cast<int>(rng.next_below(5)) - 3);
        double s_y = std::ldexp(1.0, static_cast<int>(rng.next_below(4)) - 1);
        IntTensor w({out_f, in_f});
        IntTensor x({in_f});
        Grid wg = build_uniform_grid(4, s_w);
        Grid xg = build_uniform_grid(4, s_x);
        for (int64_t i = 0; i < w.numel(); i++)
            w[i] = static_cast<int64_t>(rng.next_below(15)) - 7;
        for (int64_t i = 0; i < x.numel(); i++)
            x[i] = static_cast<int64_t>(rng.next_below(15)) - 7;
        RequantParams rq = derive_requant(s_w, s_x, s_y);
        IntTensor got = integer_layer_forward(w, x, rq, nullptr, 8);
        for (int64_t o = 0; o < out_f; o++) {
            double acc = 0.0;
            for (int64_t i = 0; i < in_f; i++) {
                double wv = from_index(wg, static_cast<double>(w[o * in_f + i] + wg.zero_index));
                double xv = from_index(xg, static_cast<double>(x[i] + xg.zero_index));
                acc += wv * xv;
            }
            double code = std::floor(acc / s_y + 0.5); // round half up
            code = std::min(127.0, std::max(-127.0, code));
            CHECK(static_cast<double>(got[o]) == code);
        }
    }
}

TEST_CASE("floor-error decomposition reproduces the worked scalar case") {
    ErrorDecomposition d = error_decomposition(4.1, 6.4);
    CHECK(d.term_w == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(d.term_x == doctest::Approx(1.6).epsilon(1e-12));
    CHECK(d.term_cross == doctest::Approx(0.04).epsilon(1e-12));
    CHECK(d.total == doctest::Approx(2.24).epsilon(1e-12));
    CHECK(d.total == doctest::Approx(4.1 * 6.4 - 24.0).epsilon(1e-12));
}

TEST_CASE("integers decompose to zero") {
    ErrorDecomposition d = error_decomposition(-3.0, 7.0);
    CHECK(d.term_w == 0.0);
    CHECK(d.term_x == 0.0);
    CHECK(d.term_cross == 0.0);
    CHECK(d.total == 0.0);
}

TEST_CASE("decomposition identity on random tensors") {
    Rng rng(55, 0);
    Tensor w({4, 4}), x({4, 4});
    for (int64_t i = 0; i < w.numel(); i++) {
        w[i] = rng.next_uniform(-100.0, 100.0);
        x[i] = rng.next_uniform(-100.0, 100.0);
    }
    ErrorDecompositionT d = error_decomposition(w, x);
    for (int64_t i = 0; i < w.numel(); i++) {
        double expect = w[i] * x[i] - std::floor(w[i]) * std::floor(x[i]);
        CHECK(std::fabs(d.total[i] - expect) <= 1e-12);
        CHECK(d.total[i] == d.term_w[i] + d.term_x[i] + d.term_cross[i]);
    }
}

TEST_CASE("oracle solves the two-weight counterexample") {
    OracleResult res = oracle_uniform({4.1, 3.2}, {6.0, 2.0}, {-1, 0, 1, 2}, 1.0, 33.92);
    CHECK(res.value == 34.0);
    REQUIRE(res.levels.size() == 2);
    CHECK(res.levels[0] == 5.0);
    CHECK(res.levels[1] == 2.0);
    CHECK(res.offsets[0] == 1);
    CHECK(res.offsets[1] == -1);
    CHECK(res.enumerated == 16);
}

TEST_CASE("single weight reduces to the nearest grid neighbor") {
    OracleResult res = oracle_uniform({2.6}, {2.0}, {-1, 0, 1, 2}, 1.0, 2.6 * 2.0);
    CHECK(res.levels[0] == 3.0);
}

TEST_CASE("oracle optimality by full scan") {
    Rng rng(77, 0);
    for (int t = 0; t < 20; t++) {
        std::vector<double> w(3), x(3);
        for (int i = 0; i < 3; i++) {
            w[static_cast<size_t>(i)] = rng.next_uniform(-4.0, 4.0);
            x[static_cast<size_t>(i)] = std::floor(rng.next_uniform(-5.0, 5.0));
        }
        double target = rng.next_uniform(-20.0, 20.0);
        OracleResult res = oracle_uniform(w, x, {-1, 0, 1, 2}, 1.0, target);
        for (int64_t c0 = -1; c0 <= 2; c0++)
            for (int64_t c1 = -1; c1 <= 2; c1++)
                for (int64_t c2 = -1; c2 <= 2; c2++) {
                    double v = (std::floor(w[0]) + static_cast<double>(c0)) * x[0] +
                               (std::floor(w[1]) + static_cast<double>(c1)) * x[1] +
                               (std::floor(w[2]) + static_cast<double>(c2)) * x[2];
                    CHECK(std::fabs(v - target) >= res.abs_error - 1e-12);
                }
    }
}

TEST_CASE("the counterexample separates the rounding domains") {
    // offsets restricted to {0, 1} (round up or down) cannot reach 34
    OracleResult unit = oracle_uniform({4.1, 3.2}, {6.0, 2.0}, {0, 1}, 1.0, 33.92);
    OracleResult real = oracle_uniform({4.1, 3.2}, {6.0, 2.0}, {-1, 0, 1, 2}, 1.0, 33.92);
    CHECK(unit.abs_error > real.abs_error);
}

TEST_CASE("candidate explosion is rejected with the count") {
    std::vector<double> w(21, 0.5), x(21, 1.0);
    std::vector<int64_t> offs = {-1, 0, 1, 2};
    CHECK_THROWS(oracle_uniform(w, x, offs, 1.0, 0.0)); // 4^21 > 1e6
}

} // TEST_SUITE
