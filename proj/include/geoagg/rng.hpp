#pragma once

// Counter-based pseudo-random numbers.
//
// A CounterRng is keyed by (seed, stream). The n-th 64-bit draw is
//   splitmix64_mix(key + n * 0x9E3779B97F4A7C15),  n = 1, 2, ...
// where key = splitmix64_mix(seed ^ splitmix64_mix(stream + 0x632BE59BD9B4E019)).
// Any (seed, stream) pair can therefore be generated independently of every
// other, which gives random access by sample index and makes sharded runs
// reproduce sequential ones bit for bit.
//
// Uniform doubles use the top 53 bits; normals use the Box-Muller transform.
// Nothing here depends on <random> distributions, whose output is
// implementation-defined.

#include <cstdint>

namespace geoagg {

std::uint64_t splitmix64_mix(std::uint64_t z) noexcept;

class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept;

  std::uint64_t next_u64() noexcept;
  /// Uniform in [0, 1).
  double uniform() noexcept;
  /// Uniform in [lo, hi].
  double uniform(double lo, double hi) noexcept;
  /// Standard normal.
  double normal() noexcept;

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace geoagg
