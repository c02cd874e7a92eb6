#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace patchstrike {

// All randomness in the project flows through these helpers instead of
// <random> distributions, whose output is implementation-defined. mt19937
// itself is pinned by the standard, so every draw here is reproducible
// byte-for-byte on any conforming toolchain.

using Rng = std::mt19937;

/// splitmix64 finalizer; used to derive independent sub-seeds (per layer,
/// per image, ...) from one master seed without correlation.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t salt = 0) {
  return Rng(static_cast<std::uint32_t>(mix_seed(seed, salt)));
}

/// Uniform in [0, 1) with 24 bits of resolution.
inline float uniform_float(Rng& rng) {
  return static_cast<float>(rng() >> 8) * (1.0f / 16777216.0f);
}

/// Uniform in [lo, hi).
inline float uniform_float(Rng& rng, float lo, float hi) {
  return lo + (hi - lo) * uniform_float(rng);
}

/// Uniform integer in [0, n). n must be positive; modulo bias is irrelevant
/// at the ranges used here (n << 2^32).
inline int uniform_int(Rng& rng, int n) {
  return static_cast<int>(rng() % static_cast<std::uint32_t>(n));
}

/// Uniform integer in [lo, hi] inclusive.
inline int uniform_int(Rng& rng, int lo, int hi) {
  return lo + uniform_int(rng, hi - lo + 1);
}

/// Fisher-Yates; std::shuffle is not deterministic across standard libraries.
template <typename T>
void deterministic_shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(uniform_int(rng, static_cast<int>(i)));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace patchstrike
