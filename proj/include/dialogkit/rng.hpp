#pragma once

#include <cstdint>
#include <string>

namespace dialogkit {

// Deterministic splitmix64 generator. Used instead of <random> engines +
// distributions so draws are identical across standard libraries, which the
// reproducibility contract of the pipeline depends on.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform integer in [0, n). n must be > 0.
    std::uint64_t uniform_below(std::uint64_t n) {
        // Rejection sampling to avoid modulo bias.
        std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            std::uint64_t r = next();
            if (r >= threshold) return r % n;
        }
    }

    // Uniform double in [0, 1).
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform01() < p; }

private:
    std::uint64_t state_;
};

// FNV-1a over bytes; mixes a text key into a seed so each dialog gets an
// independent deterministic stream.
inline std::uint64_t hash_key(std::uint64_t seed, const std::string& key) {
    std::uint64_t h = 14695981039346656037ULL ^ seed;
    for (unsigned char c : key) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace dialogkit
