#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace promo {

// splitmix64; used to derive independent stream seeds from (seed, tag) pairs.
inline uint64_t mix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline uint64_t mix64(uint64_t a, uint64_t b) { return mix64(a ^ mix64(b)); }

/// Deterministic RNG. mt19937_64 output is pinned by the standard; all
/// derived draws below avoid std distributions, whose results are
/// implementation-defined.
class Rng {
public:
    explicit Rng(uint64_t seed) : eng_(seed) {}
    Rng(uint64_t seed, uint64_t stream) : eng_(mix64(seed, stream)) {}

    uint64_t next_u64() { return eng_(); }

    /// Uniform in [0,1) on the 2^-53 dyadic grid.
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }
    float uniformf() { return float(next_u64() >> 40) * 0x1.0p-24f; }

    /// Uniform integer in [0, n).
    int uniform_int(int n) { return int(next_u64() % uint64_t(n)); }

    /// Uniform in [lo, hi].
    double uniform_range(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    bool bernoulli(double p) { return uniform() < p; }

    /// Standard normal via Box-Muller (cached pair).
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform(), u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586477 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

private:
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace promo
