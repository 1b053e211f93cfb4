#pragma once

#include <cstdint>
#include <random>

namespace decmarl {

using Rng = std::mt19937_64;

// splitmix64 finalizer, used to derive independent per-component seeds
// from one master seed.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  return mix64(master ^ mix64(stream));
}

// Uniform double in [0, 1) from the top 53 bits. Hand-rolled so that draw
// sequences are identical across standard libraries.
inline double next_unit(Rng& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

inline double next_uniform(Rng& g, double lo, double hi) {
  return lo + (hi - lo) * next_unit(g);
}

// Unbiased integer in [0, n) via rejection sampling.
inline int next_below(Rng& g, int n) {
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t r = g();
  while (r >= limit) r = g();
  return static_cast<int>(r % bound);
}

}  // namespace decmarl
