#pragma once

// Deterministic randomness utilities.
//
// std::mt19937_64 produces a bit-identical stream everywhere, but the standard
// distributions are implementation-defined, so benchmark records would differ
// across standard libraries. All mappings from raw engine output to usable
// values are therefore hand-rolled here.

#include <cstdint>
#include <random>
#include <string_view>

namespace mmdrrt {

// SplitMix64 finalizer; good avalanche, used for seed derivation.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t v) {
    return mix64(seed ^ (v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2)));
}

inline std::uint64_t hash_str(std::string_view s, std::uint64_t seed = 0xcbf29ce484222325ULL) {
    std::uint64_t h = seed;
    for (unsigned char c : s) h = (h ^ c) * 0x100000001b3ULL;  // FNV-1a step
    return mix64(h);
}

class Rng {
  public:
    explicit Rng(std::uint64_t seed = 0) : eng_(seed) {}

    std::uint64_t u64() { return eng_(); }

    // Uniform in [0, 1).
    double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Uniform integer in [lo, hi] inclusive. Modulo bias is bounded by
    // range / 2^64 and is irrelevant at the ranges used here.
    int uniform_int(int lo, int hi) {
        const std::uint64_t range = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<int>(eng_() % range);
    }

    std::size_t uniform_index(std::size_t n) { return static_cast<std::size_t>(eng_() % n); }

    bool bernoulli(double p) { return uniform01() < p; }

    Rng fork(std::uint64_t salt) { return Rng(hash_combine(eng_(), salt)); }

  private:
    std::mt19937_64 eng_;
};

}  // namespace mmdrrt
