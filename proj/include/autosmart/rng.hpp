#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace autosmart {

/// Deterministic draws over mt19937_64. The std:: distribution objects are
/// implementation defined, so every value that must reproduce byte for byte
/// across toolchains goes through these helpers instead.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform draw from [0, n). Modulo bias is negligible for n << 2^64 and the
/// result is reproducible, which is what matters here.
inline int64_t uniform_below(std::mt19937_64& rng, int64_t n) {
  return static_cast<int64_t>(rng() % static_cast<uint64_t>(n));
}

/// Standard normal via Box-Muller (no cached spare, two draws per call).
inline double normal01(std::mt19937_64& rng) {
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(6.28318530717958647692 * u2);
}

/// k distinct indices from [0, n) in ascending order (partial Fisher-Yates).
std::vector<int64_t> sample_without_replacement(std::mt19937_64& rng, int64_t n,
                                                int64_t k);

}  // namespace autosmart
