#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace elgof {

inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Seed of an independent substream addressed by a path of counters, e.g.
/// (seed, {stream tag, scenario, replicate}).
inline std::uint64_t substream_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = mix64(seed);
  std::uint64_t salt = 1;
  for (std::uint64_t p : path) {
    h = mix64(h ^ mix64(p + 0x632BE59BD9B4E019ULL * salt));
    ++salt;
  }
  return h;
}

using Engine = std::mt19937_64;

/// Uniform on [0, 1) from the top 53 bits.
inline double uniform01(Engine& engine) {
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

// Stream tags keep data generation and resampling draws disjoint.
inline constexpr std::uint64_t kStreamData = 1;
inline constexpr std::uint64_t kStreamMultipliers = 2;

}  // namespace elgof
