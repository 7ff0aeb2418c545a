#include "gptq/codec.hpp"
#include "gptq/rng.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace gptq;

namespace {

QuantParams params_for(Scheme scheme, int bits, double scale, double a = 2.0) {
    QuantParams p;
    p.scheme = scheme;
    p.bits = bits;
    p.weight_scales = {scale};
    p.power_exponent = a;
    return p;
}

} // namespace

TEST_SUITE("codec") {

TEST_CASE("max-abs scales per channel") {
    Tensor w({2, 3}, {7, -3, 1, 0, 0, 0});
    QuantParams p;
    p.scheme = Scheme::uniform;
    p.bits = 4;
    compute_scales(p, w);
    CHECK(p.weight_scales[0] == doctest::Approx(1.0).epsilon(1e-15)); // 7 / (2^3 - 1)
    CHECK(p.weight_scales[1] == 1.0);                                 // all-zero fallback
    CHECK(p.scale_fallback);

    Tensor w8({1, 1}, {2.54});
    QuantParams p8;
    p8.scheme = Scheme::uniform;
    p8.bits = 8;
    compute_scales(p8, w8);
    CHECK(p8.weight_scales[0] == doctest::Approx(0.02).epsilon(1e-12)); // 2.54 / 127
}

TEST_CASE("scales align the top level to maxabs for every scheme") {
    Rng rng(3, 0);
    Tensor w({3, 5});
    for (double& v : w.data) v = 2.5 * rng.next_gaussian();
    for (Scheme s : {Scheme::uniform, Scheme::logarithmic, Scheme::floatgrid, Scheme::power}) {
        QuantParams p;
        p.scheme = s;
        p.bits = 4;
        compute_scales(p, w);
        for (int64_t c = 0; c < 3; c++) {
            Grid g = build_grid(p, c);
            double maxabs = max_abs_range(w, c * 5, (c + 1) * 5);
            CHECK(g.max_level() == doctest::Approx(maxabs).epsilon(1e-12));
            CHECK(-g.min_level() == doctest::Approx(maxabs).epsilon(1e-12));
        }
    }
}

TEST_CASE("uniform 2-bit grid") {
    Grid g = build_grid(params_for(Scheme::uniform, 2, 1.0), 0);
    REQUIRE(g.count() == 3);
    CHECK(g.levels[0] == -1.0);
    CHECK(g.levels[1] == 0.0);
    CHECK(g.levels[2] == 1.0);
    CHECK(g.zero_index == 1);
}

TEST_CASE("log 3-bit grid enumerates 0 and +-s*2^-k") {
    Grid g = build_grid(params_for(Scheme::logarithmic, 3, 1.0), 0);
    std::vector<double> expect = {-1.0, -0.5, -0.25, 0.0, 0.25, 0.5, 1.0};
    REQUIRE(g.count() == static_cast<int64_t>(expect.size()));
    for (size_t i = 0; i < expect.size(); i++) CHECK(g.levels[i] == expect[i]);
}

TEST_CASE("float E2M1 grid by exhausting all 16 codes") {
    QuantParams p = params_for(Scheme::floatgrid, 4, 1.0);
    Grid g = build_grid(p, 0);
    std::vector<double> expect = {-6, -4, -3, -2, -1.5, -1, -0.5, 0, 0.5, 1, 1.5, 2, 3, 4, 6};
    REQUIRE(g.count() == static_cast<int64_t>(expect.size()));
    for (size_t i = 0; i < expect.size(); i++) CHECK(g.levels[i] == expect[i]);
    CHECK(g.levels[static_cast<size_t>(g.zero_index)] == 0.0);
}

TEST_CASE("float layout must add up to the bit width") {
    QuantParams p = params_for(Scheme::floatgrid, 4, 1.0);
    p.float_layout = {3, 2}; // 1+3+2 != 4
    p.float_layout_set = true;
    CHECK_THROWS(build_grid(p, 0));
}

TEST_CASE("power grid reduces to uniform at exponent 1") {
    Grid pw = build_grid(params_for(Scheme::power, 4, 0.5, 1.0), 0);
    Grid un = build_grid(params_for(Scheme::uniform, 4, 0.5), 0);
    REQUIRE(pw.count() == un.count());
    for (int64_t i = 0; i < pw.count(); i++)
        CHECK(pw.levels[static_cast<size_t>(i)] ==
              doctest::Approx(un.levels[static_cast<size_t>(i)]).epsilon(1e-15));
}

TEST_CASE("index coordinate hits nodes and interpolates") {
    Grid g = build_grid(params_for(Scheme::uniform, 4, 1.0), 0);
    CHECK(to_index(g, g.levels[3]) == 3.0);
    double mid = 0.5 * (g.levels[1] + g.levels[2]);
    CHECK(to_index(g, mid) == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(from_index(g, 0.0) == g.levels[0]);
    CHECK(from_index(g, 2.5) == doctest::Approx(0.5 * (g.levels[2] + g.levels[3])).epsilon(1e-12));
    // clamped extrapolation
    CHECK(to_index(g, 100.0) == static_cast<double>(g.count() - 1));
    CHECK(from_index(g, -3.0) == g.levels[0]);
}

TEST_CASE("to_index and from_index are mutually inverse on every scheme") {
    Rng rng(11, 0);
    for (Scheme s : {Scheme::uniform, Scheme::logarithmic, Scheme::floatgrid, Scheme::power}) {
        Grid g = build_grid(params_for(s, 4, 0.7), 0);
        for (int t = 0; t < 500; t++) {
            double x = rng.next_uniform(g.min_level(), g.max_level());
            CHECK(std::fabs(from_index(g, to_index(g, x)) - x) < 1e-12);
            double k = rng.next_uniform(0.0, static_cast<double>(g.count() - 1));
            CHECK(std::fabs(to_index(g, from_index(g, k)) - k) < 1e-12);
        }
    }
}

TEST_CASE("soft rounding basics") {
    CHECK(soft_round(2.0, 7.0) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(soft_round(-3.0, 21.0) == doctest::Approx(-3.0).epsilon(1e-12));
    CHECK(soft_round(2.5, 9.0) == doctest::Approx(2.5).epsilon(1e-12));
    CHECK_THROWS(soft_round(1.0, 0.0));
}

TEST_CASE("soft rounding converges to hard rounding") {
    double sup = 0.0;
    for (int i = 0; i <= 1000; i++) {
        if (i >= 499 && i <= 501) continue; // within 1e-3 of the half point
        double k = static_cast<double>(i) * 1e-3;
        sup = std::max(sup, std::fabs(soft_round(k, 1000.0) - std::round(k)));
    }
    CHECK(sup < 1e-3);
}

TEST_CASE("soft rounding is monotone and shifts by one per period") {
    Rng rng(5, 0);
    for (int t = 0; t < 200; t++) {
        double beta = rng.next_uniform(0.5, 60.0);
        double k = rng.next_uniform(-4.0, 4.0);
        double dk = rng.next_uniform(0.0, 2.0);
        CHECK(soft_round(k + dk, beta) >= soft_round(k, beta) - 1e-12);
        CHECK(soft_round(k + 1.0, beta) == doctest::Approx(soft_round(k, beta) + 1.0).epsilon(1e-12));
    }
}

TEST_CASE("hard quantization follows nearest index rounding") {
    Grid u = build_grid(params_for(Scheme::uniform, 4, 1.0), 0);
    CHECK(quantize_dequantize(u, 0.9) == 1.0);
    CHECK(quantize_dequantize(u, 10.0) == 7.0); // clamp to 2^3 - 1
    Grid lg = build_grid(params_for(Scheme::logarithmic, 3, 1.0), 0);
    // 0.7 sits at index 5.4 between 0.5 and 1; nearest index is 0.5
    CHECK(quantize_dequantize(lg, 0.7) == 0.5);
}

TEST_CASE("ties round away from the zero level") {
    Grid u = build_grid(params_for(Scheme::uniform, 4, 1.0), 0);
    CHECK(quantize_dequantize(u, 0.5) == 1.0);
    CHECK(quantize_dequantize(u, -0.5) == -1.0);
    CHECK(quantize_dequantize(u, 2.5) == 3.0);
    CHECK(quantize_dequantize(u, -2.5) == -3.0);
}

TEST_CASE("hard outputs are grid members, idempotently") {
    Rng rng(13, 0);
    for (Scheme s : {Scheme::uniform, Scheme::logarithmic, Scheme::floatgrid, Scheme::power}) {
        Grid g = build_grid(params_for(s, 4, 1.3), 0);
        for (int t = 0; t < 400; t++) {
            double x = rng.next_uniform(-2.0, 2.0);
            double q = quantize_dequantize(g, x);
            CHECK(g.contains(q));
            CHECK(quantize_dequantize(g, q) == q);
        }
    }
}

TEST_CASE("uniform index rounding equals the direct scale formula") {
    Rng rng(17, 0);
    double s = 0.3;
    Grid g = build_grid(params_for(Scheme::uniform, 4, s), 0);
    for (int t = 0; t < 2000; t++) {
        double x = rng.next_uniform(-3.0, 3.0);
        double direct = std::round(x / s); // ties away from zero
        direct = std::clamp(direct, -7.0, 7.0) * s;
        CHECK(quantize_dequantize(g, x) == doctest::Approx(direct).epsilon(1e-12));
    }
}

TEST_CASE("per-channel bit widths build per-channel grids") {
    Tensor w({2, 2}, {1.0, -2.0, 4.0, 3.0});
    QuantParams p;
    p.scheme = Scheme::uniform;
    p.bits = 4;
    p.channel_bits = {2, 6};
    compute_scales(p, w);
    Grid g0 = build_grid(p, 0);
    Grid g1 = build_grid(p, 1);
    CHECK(g0.count() == 3);
    CHECK(g1.count() == 63);
    CHECK(g0.max_level() == doctest::Approx(2.0));
    CHECK(g1.max_level() == doctest::Approx(4.0));
}

TEST_CASE("grid dump is one level per line") {
    Grid g = build_grid(params_for(Scheme::uniform, 2, 1.0), 0);
    CHECK(dump_grid(g) == "-1\n0\n1\n");
}

TEST_CASE("bits outside [2,8] are rejected") {
    Tensor w({1, 1}, {1.0});
    QuantParams p;
    p.bits = 1;
    CHECK_THROWS(compute_scales(p, w));
    p.bits = 9;
    CHECK_THROWS(compute_scales(p, w));
}

TEST_CASE("default betas per scheme") {
    CHECK(default_beta(Scheme::power) == 20.0);
    CHECK(default_beta(Scheme::floatgrid) == 30.0);
    CHECK(default_beta(Scheme::logarithmic) == 50.0);
    CHECK(default_beta(Scheme::uniform) == 50.0);
}

} // TEST_SUITE
