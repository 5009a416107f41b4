// This file is part of dercoopt, a co-optimization library for flexible
// demand and battery storage behind a net-metered revenue meter.
// MIT license; see LICENSE.

#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace dercoopt {

// splitmix64 mixing step; used to derive independent engine seeds from a
// (seed, stream) pair so parallel workers never share a sequence.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Deterministic random source. mt19937_64's output sequence is pinned by the
// C++ standard, and the normal sampler below is Box-Muller on two fixed
// 53-bit uniforms, so identical (seed, stream) pairs reproduce identical
// draws on any conforming platform. std::normal_distribution is avoided on
// purpose: its algorithm is implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
      : engine_(splitmix64(splitmix64(seed) ^ splitmix64(stream + 1))) {}

  // Uniform on [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; always consumes exactly two uniforms.
  // 1 - uniform() lies in (0, 1], keeping the log argument positive.
  double normal() {
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.141592653589793238462643383279502884 * u2);
  }

  std::uint64_t bits() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace dercoopt
