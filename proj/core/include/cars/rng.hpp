#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

namespace cars {

/// Counter-based 64-bit generator (SplitMix64 applied to seed + counter).
/// Draw i depends only on (seed, i), so streams are reproducible on every
/// platform and easy to re-create in tests.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) noexcept : seed_(seed) {}

  std::uint64_t next_u64() noexcept { return at(seed_, counter_++); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n); n > 0. Uses rejection to avoid modulo bias.
  std::uint64_t below(std::uint64_t n) noexcept;

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t counter() const noexcept { return counter_; }

  static std::uint64_t at(std::uint64_t seed, std::uint64_t index) noexcept {
    std::uint64_t z = seed + (index + 1) * 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

/// Inverse-CDF draw: the smallest index i with u·Σw < w_0 + … + w_i.
/// Zero-weight entries are never returned; ties resolve to the lower index.
/// Requires a positive total weight.
std::size_t inverse_cdf(std::span<const double> weights, double u);

}  // namespace cars
