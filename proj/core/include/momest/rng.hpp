#pragma once

#include <cstdint>

namespace momest {

/// SplitMix64 finalizer. Bijective mixing of a 64-bit word.
std::uint64_t mix64(std::uint64_t z) noexcept;

/// Seed for replication r of a run with base seed `base`: mix64(base ^ r).
/// Every replication of an experiment draws from its own derived stream, so
/// results do not depend on how many replications run or in which order.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t r) noexcept;

/// Deterministic generator: SplitMix64 stream, uniforms in [0,1) from the
/// top 53 bits, normals by the Marsaglia polar method.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next_u64() noexcept;
  double next_uniform() noexcept;  // [0, 1)
  double next_normal() noexcept;   // N(0, 1)

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace momest
