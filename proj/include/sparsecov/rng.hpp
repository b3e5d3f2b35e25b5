#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace sparsecov::rng {

// Counter-based generation: every draw is a pure function of (seed, indices).
// Replications, mask entries and expansion coefficients each get their own
// derived stream, so enlarging one dimension never perturbs draws in another.

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derive a child stream/key by folding indices into the seed one at a time.
inline std::uint64_t derive(std::uint64_t seed, std::uint64_t a) {
  return splitmix64(splitmix64(seed) ^ (a + 0x5851f42d4c957f2dULL));
}
inline std::uint64_t derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return derive(derive(seed, a), b);
}
inline std::uint64_t derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                            std::uint64_t c) {
  return derive(derive(seed, a, b), c);
}

/// Map 64 bits to [0, 1).
inline double to_unit(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

inline double uniform(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return to_unit(derive(seed, a, b));
}

/// Standard normal via Box-Muller on two derived uniforms.
inline double standard_normal(std::uint64_t key) {
  const double u1 = to_unit(derive(key, 0));  // 1-u1 in (0,1] keeps log finite
  const double u2 = to_unit(derive(key, 1));
  return std::sqrt(-2.0 * std::log1p(-u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

inline double standard_normal(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return standard_normal(derive(seed, a, b));
}

// Stream tags (arbitrary distinct constants).
inline constexpr std::uint64_t kStreamReplicate = 0x7265706cULL;
inline constexpr std::uint64_t kStreamMask = 0x6d61736bULL;
inline constexpr std::uint64_t kStreamScores = 0x78690000ULL;
inline constexpr std::uint64_t kStreamSelection = 0x73656c65ULL;

}  // namespace sparsecov::rng
