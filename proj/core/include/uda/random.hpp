#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace uda {

// SplitMix64, used only to expand a 64-bit seed into generator state.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next();

 private:
  std::uint64_t state_;
};

/// xoshiro256** 1.0 (Blackman & Vigna). Seeded by running SplitMix64 over the
/// 64-bit seed. Every sampling helper below is defined in terms of next() so
/// datasets and initializations are identical on every platform; the
/// <random> distributions are implementation-defined and are never used.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next();

  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);

  // Uniform integer on [0, bound) by rejection; bound must be > 0.
  std::uint64_t below(std::uint64_t bound);

  // Standard normal via the Box-Muller transform; consumes two uniforms per
  // call and keeps no cached second variate.
  double normal();

  // Fisher-Yates permutation of 0..n-1.
  std::vector<std::size_t> permutation(std::size_t n);

 private:
  std::array<std::uint64_t, 4> s_{};
};

// Derives an independent stream seed from a base seed and a stream index.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace uda
