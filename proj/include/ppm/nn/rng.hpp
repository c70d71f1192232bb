#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace ppm::nn {

// Deterministic random source. The engine is std::mt19937_64 (a standardized
// algorithm, so the raw stream is identical on every platform); the
// distributions below are implemented here instead of using <random>'s,
// whose output is implementation-defined. Identical seed => bit-identical
// uniform/normal/shuffle/dropout streams everywhere.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed), seed_(seed) {}

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() { return engine_(); }

    // uniform in [0,1) with 53 bits of precision
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Box-Muller; draws two uniforms per call, no caching so the stream
    // position is easy to reason about.
    double normal(double mean, double stddev) {
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        return mean + stddev * r * std::cos(2.0 * M_PI * u2);
    }

    // integer in [0, n)
    std::uint64_t below(std::uint64_t n) {
        // modulo bias is irrelevant at the scales used here (n << 2^64)
        return engine_() % n;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
    std::uint64_t seed_;
};

// splitmix64, used to derive independent per-candidate seeds from
// (global seed, candidate index).
inline std::uint64_t derive_seed(std::uint64_t global_seed, std::uint64_t index) {
    std::uint64_t z = global_seed + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace ppm::nn
