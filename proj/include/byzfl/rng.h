// Counter-based random source shared by every stochastic component.
//
// The generator is Philox4x32-10. A stream is identified by a 64-bit key;
// outputs are the Philox blocks of an incrementing 128-bit counter, consumed
// as 32-bit words in order. Derived streams hash a name into a new key, so components
// can be added or removed without perturbing each other's draws. See
// docs/rng.md for the exact word order and test vectors.

#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

namespace byzfl {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

/// One Philox4x32 block with 10 rounds.
PhiloxCounter philox4x32_10(PhiloxCounter counter, PhiloxKey key);

class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }

  /// Independent stream keyed by (seed, name).
  Rng derive(std::string_view name) const;
  /// Independent stream keyed by (seed, name, index), e.g. ("client", 7).
  Rng derive(std::string_view name, std::uint64_t index) const;

  std::uint32_t next_u32();
  std::uint64_t next_u64();

  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  /// Uniform in [lo, hi). Returns lo exactly when lo == hi.
  double uniform(double lo, double hi);
  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);
  /// Standard normal via Box-Muller (one variate per two uniforms).
  double normal();
  /// Gamma(shape, 1) via Marsaglia-Tsang; shape < 1 uses the U^(1/shape) boost.
  double gamma(double shape);

  /// Fisher-Yates shuffle of [0, n).
  std::vector<std::size_t> permutation(std::size_t n);
  /// k distinct indices from [0, n), in draw order.
  std::vector<std::size_t> sample_without_replacement(std::size_t n,
                                                      std::size_t k);

 private:
  void refill();

  std::uint64_t seed_;
  PhiloxKey key_;
  PhiloxCounter counter_{0, 0, 0, 0};
  PhiloxCounter block_{};
  int next_word_ = 4;
};

/// FNV-1a 64-bit hash; also used for config hashes.
std::uint64_t fnv1a64(std::string_view bytes,
                      std::uint64_t basis = 0xcbf29ce484222325ULL);

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

}  // namespace byzfl
