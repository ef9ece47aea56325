#pragma once

#include <cstdint>

namespace ember::rng {

// Counter-based hashing RNG. Every draw is a pure function of a key built
// from (seed, stream, counters...), so random decisions are reproducible and
// independent of evaluation order or thread count.

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t key(std::uint64_t seed) { return splitmix64(seed); }

template <class... Rest>
inline std::uint64_t key(std::uint64_t seed, std::uint64_t id, Rest... rest) {
    return key(splitmix64(seed ^ splitmix64(id + 0x632be59bd9b4e019ULL)), rest...);
}

/// Uniform double in [0, 1).
inline double u01(std::uint64_t k) {
    return static_cast<double>(k >> 11) * 0x1.0p-53;
}

/// Uniform double in [lo, hi).
inline double uniform(std::uint64_t k, double lo, double hi) {
    return lo + (hi - lo) * u01(k);
}

// Stream tags keep independent uses of the scene seed decorrelated.
inline constexpr std::uint64_t kStreamGeometry = 0x67656f6d0001ULL;
inline constexpr std::uint64_t kStreamSmoke = 0x736d6f6b0002ULL;

} // namespace ember::rng
