#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace burnout {

/// 64-bit FNV-1a over raw bytes.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);

/// SplitMix64 finalizer; used to decorrelate derived seeds.
std::uint64_t splitmix64(std::uint64_t x);

/// Derive an independent stream seed from a base seed, a string key and an index.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view key, std::uint64_t index = 0);

/// Seeded generator with platform-independent sampling helpers.
///
/// Only the raw mt19937_64 output sequence is standardized across standard
/// libraries, so all draws here are built from raw 64-bit words instead of
/// the <random> distribution classes.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t index(std::uint64_t n);

  /// Uniform integer in [lo, hi] (inclusive).
  std::int64_t between(std::int64_t lo, std::int64_t hi);

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();

  /// True with probability numerator / denominator (integer-only path).
  bool chance(std::uint64_t numerator, std::uint64_t denominator);

 private:
  std::mt19937_64 engine_;
};

}  // namespace burnout
