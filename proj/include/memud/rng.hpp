#pragma once

#include <cstdint>
#include <random>

#include "memud/types.hpp"

namespace memud {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer. Used to derive independent child seeds from a
/// (parent seed, stream index) pair, so that the seed of frame k never
/// depends on how many frames were generated before it.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t stream) {
    return splitmix64(splitmix64(parent) ^ (stream * 0xD1B54A32D192ED03ULL + 1));
}

inline double gaussian(Rng& rng, double stddev = 1.0) {
    std::normal_distribution<double> dist(0.0, stddev);
    return dist(rng);
}

/// Circular complex Gaussian with the given standard deviation per component.
inline cplx complex_gaussian(Rng& rng, double per_component_std) {
    std::normal_distribution<double> dist(0.0, 1.0);
    const double re = dist(rng);
    const double im = dist(rng);
    return {per_component_std * re, per_component_std * im};
}

inline double uniform01(Rng& rng) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline Symbol random_symbol(Rng& rng) { return (rng() >> 63) ? Symbol{1} : Symbol{-1}; }

}  // namespace memud
