#pragma once

// Counter-based normal deviates. A draw is a pure function of its key, so a
// measurement stream does not depend on evaluation order or thread count, and
// runs that differ only in configuration share the same noise realization.
//
// Generator: SplitMix64 finalizer chained over the key words, Box-Muller on
// two 53-bit uniforms.

#include <cmath>
#include <cstdint>
#include <numbers>

namespace dkff {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

struct NoiseKey {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;   // sensor kind or other consumer
  std::uint64_t counter = 0;  // tick index
  std::uint64_t feature = 0;
  std::uint64_t component = 0;
};

inline std::uint64_t hash_key(const NoiseKey& k, std::uint64_t salt) {
  std::uint64_t h = splitmix64(k.seed ^ salt);
  h = splitmix64(h ^ k.stream);
  h = splitmix64(h ^ k.counter);
  h = splitmix64(h ^ k.feature);
  return splitmix64(h ^ k.component);
}

/// Uniform in (0, 1).
inline double uniform_open(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

/// Standard normal deviate for `key`.
inline double standard_normal(const NoiseKey& key) {
  const double u1 = uniform_open(hash_key(key, 0x243f6a8885a308d3ULL));
  const double u2 = uniform_open(hash_key(key, 0x13198a2e03707344ULL));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace dkff
