#include "cars/rng.hpp"

#include "cars/errors.hpp"

namespace cars {

std::uint64_t CounterRng::below(std::uint64_t n) noexcept {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % n;
}

std::size_t inverse_cdf(std::span<const double> weights, double u) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw PreconditionError("inverse_cdf over zero total weight");
  const double target = u * total;
  double cum = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    cum += weights[i];
    last_positive = i;
    if (target < cum) return i;
  }
  // Rounding left target at or past the accumulated total.
  return last_positive;
}

}  // namespace cars
