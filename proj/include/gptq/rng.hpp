// Counter-based deterministic random generator. Every draw is a pure
// function of (seed, stream, counter), so results never depend on thread
// count or call interleaving.

#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace gptq {

inline uint64_t mix64(uint64_t z) {
    // splitmix64 finalizer
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline uint64_t hash_keys(std::initializer_list<uint64_t> keys) {
    uint64_t h = 0x243f6a8885a308d3ull;
    for (uint64_t k : keys) h = mix64(h ^ k);
    return h;
}

/// Stateful convenience wrapper around the counter hash. Cheap to construct;
/// derive one per (seed, stream) and draw sequentially.
class Rng {
  public:
    Rng(uint64_t seed, uint64_t stream) : state_(hash_keys({seed, stream})) {}

    uint64_t next_u64() {
        counter_++;
        return mix64(state_ ^ counter_);
    }

    // uniform in [0, 1)
    double next_uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // uniform in [lo, hi)
    double next_uniform(double lo, double hi) {
        return lo + (hi - lo) * next_uniform();
    }

    // standard normal via Box-Muller
    double next_gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = next_uniform();
        double u2 = next_uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // integer in [0, n)
    uint64_t next_below(uint64_t n) { return next_u64() % n; }

  private:
    uint64_t state_;
    uint64_t counter_ = 0;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace gptq
