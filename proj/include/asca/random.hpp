#pragma once

// Counter-based pseudo-random values: every draw is a pure function of
// (seed, counter), so streams are reproducible on any platform and a
// checkpoint only needs to store counters, never generator state.

#include <cmath>
#include <cstdint>
#include <numbers>

namespace asca {

inline constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline constexpr std::uint64_t hash_draw(std::uint64_t seed, std::uint64_t counter) noexcept {
    return splitmix64(splitmix64(seed) ^ splitmix64(counter + 0x632be59bd9b4e019ULL));
}

// Uniform in [0, 1) with 53 random bits.
inline double uniform01(std::uint64_t seed, std::uint64_t counter) noexcept {
    return static_cast<double>(hash_draw(seed, counter) >> 11) * 0x1.0p-53;
}

inline double uniform_pm1(std::uint64_t seed, std::uint64_t counter) noexcept {
    return 2.0 * uniform01(seed, counter) - 1.0;
}

// Standard normal via Box-Muller on two consecutive counters.
inline double normal01(std::uint64_t seed, std::uint64_t counter) noexcept {
    const double u1 = 1.0 - uniform01(seed, 2 * counter);  // (0, 1]
    const double u2 = uniform01(seed, 2 * counter + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

inline constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
    return splitmix64(seed ^ splitmix64(stream * 0xd1342543de82ef95ULL + 1));
}

}  // namespace asca
