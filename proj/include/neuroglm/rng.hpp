#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

// Deterministic, portable randomness. Every stochastic component draws from a
// stream derived from (user seed, purpose tag, index), so parallel and serial
// runs see identical numbers. std::mt19937_64 output is fixed by the C++
// standard; the helpers below avoid std distributions, whose mappings are
// implementation defined.

namespace neuroglm::rng {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Engine for stream `index` of the given purpose under a user seed.
inline std::mt19937_64 stream(std::uint64_t seed, std::string_view purpose,
                              std::uint64_t index) {
    std::uint64_t s = seed ^ fnv1a64(purpose);
    std::uint64_t mix = s + 0x632be59bd9b4e019ULL * (index + 1);
    // burn two rounds so nearby (seed, index) pairs decorrelate
    splitmix64(mix);
    return std::mt19937_64(splitmix64(mix));
}

/// Unbiased draw from [0, n) by rejection on the top multiple of n.
inline std::uint64_t uniform_index(std::mt19937_64& g, std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
        x = g();
    } while (x >= limit);
    return x % n;
}

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(std::mt19937_64& g) {
    return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64& g, double lo, double hi) {
    return lo + (hi - lo) * uniform01(g);
}

/// Standard normal via Box-Muller (one value per call, cached pair dropped
/// to keep the draw count predictable).
inline double gauss(std::mt19937_64& g) {
    double u1 = uniform01(g);
    while (u1 <= 0.0)
        u1 = uniform01(g);
    const double u2 = uniform01(g);
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
}

/// In-place Fisher-Yates shuffle driven by uniform_index.
template <typename T>
void shuffle(std::vector<T>& v, std::mt19937_64& g) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(uniform_index(g, i));
        std::swap(v[i - 1], v[j]);
    }
}

} // namespace neuroglm::rng
