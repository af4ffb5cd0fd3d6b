#pragma once

#include <cstdint>
#include <random>

namespace rflin {

/// Seeded, splittable random source.
///
/// The engine is std::mt19937_64 seeded through std::seed_seq; both
/// algorithms are fully specified by the C++ standard, so a given
/// (seed, stream) produces the same sequence on every conforming platform.
/// Uniform and normal variates are derived from the raw 64-bit output by
/// hand (the standard distributions are implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller (one variate per call).
  double normal();

  /// Exponential(1) variate.
  double exponential();

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  /// Independent child stream. Deterministic in (seed, stream, child).
  Rng split(std::uint64_t child) const;

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
};

}  // namespace rflin
