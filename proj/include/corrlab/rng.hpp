#pragma once

// Reproducible random streams.
//
// Every stochastic draw in corrlab comes from std::mt19937_64, whose output
// sequence is fixed by the C++ standard. Streams are keyed by
// (seed, purpose, index): the purpose string is hashed with 64-bit FNV-1a and
// combined with the seed and index through the SplitMix64 finalizer, and the
// result seeds the engine. Conversions to bounded integers and unit doubles
// are done here rather than with <random> distributions, whose algorithms
// are implementation-defined.

#include <cstdint>
#include <random>
#include <string_view>

namespace corrlab::rng {

using Engine = std::mt19937_64;

inline constexpr std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30U)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27U)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31U);
}

inline constexpr std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ULL;
    }
    return h;
}

inline constexpr std::uint64_t derive_seed(std::uint64_t seed, std::string_view purpose, std::uint64_t index = 0) {
    return splitmix64(splitmix64(seed ^ fnv1a(purpose)) ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

inline Engine make_engine(std::uint64_t seed, std::string_view purpose, std::uint64_t index = 0) {
    return Engine(derive_seed(seed, purpose, index));
}

/// Uniform integer in [0, n), n > 0, by rejection of the biased tail.
inline std::uint64_t uniform_below(Engine& eng, std::uint64_t n) {
    const std::uint64_t limit = (~std::uint64_t{0}) - ((~std::uint64_t{0}) % n + 1) % n;
    for (;;) {
        const std::uint64_t x = eng();
        if (x <= limit) {
            return x % n;
        }
    }
}

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Engine& eng) { return static_cast<double>(eng() >> 11U) * 0x1.0p-53; }

} // namespace corrlab::rng
