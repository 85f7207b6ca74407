#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace conex {

/// Seeded generator with platform-independent distributions.
///
/// std::uniform_int_distribution and friends are implementation-defined, so
/// seeded runs would differ between standard libraries. This wrapper only
/// relies on the raw mt19937_64 output sequence, which the standard fixes.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Independent stream keyed by (seed, tag, a, b). Used for per-member
  /// streams so results do not depend on evaluation order.
  static Rng stream(std::uint64_t seed, std::uint64_t tag, std::uint64_t a,
                    std::uint64_t b = 0);

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, n). n must be > 0.
  std::size_t index(std::size_t n);

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01();

  /// Uniform random k-subset of {0..n-1}, returned in ascending order.
  std::vector<std::size_t> subset(std::size_t n, std::size_t k);

 private:
  std::mt19937_64 engine_;
};

/// SplitMix64 finalizer; also used to mix stream keys.
std::uint64_t mix64(std::uint64_t x);

}  // namespace conex
