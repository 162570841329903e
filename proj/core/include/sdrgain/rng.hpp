#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace sdrgain {

/// Seeded random stream. Draws are produced from raw mt19937_64 output with
/// explicit conversions so a seed yields the same sequence on every platform
/// (the standard distributions are implementation-defined).
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  std::vector<double> uniform_vector(std::size_t n);

  /// Uniform integer in [0, n), rejection-sampled to avoid modulo bias.
  std::uint64_t below(std::uint64_t n);

  /// Standard normal via Box-Muller (second variate cached).
  double normal();

  /// Child stream whose seed is a SplitMix64 hash of (this seed, key).
  /// Does not advance this stream.
  RngStream split(std::uint64_t key) const;

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Fisher-Yates permutation of [0, n).
std::vector<std::size_t> permutation(std::size_t n, RngStream& rng);

}  // namespace sdrgain
