#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cars/language_model.hpp"
#include "cars/oracle.hpp"

namespace cars {

/// Counters and trajectories for one sampler run.
struct RunMetrics {
  std::size_t generations = 0;  // complete LM generations (accepted or not)
  std::size_t accepted = 0;
  std::size_t lm_calls = 0;     // next-token queries across all generations
  std::vector<double> p_eps_trajectory;        // p_ε after each generation
  std::vector<std::size_t> cumulative_accepts;  // after each generation
  std::optional<double> kl_proxy;   // vs the unconstrained LM, nats
  std::optional<double> kl_oracle;  // vs exact P^L, nats
  std::optional<double> tv_oracle;  // vs exact P^L
  std::optional<std::pair<double, double>> bootstrap_ci;
};

/// Reference probability for a terminated sequence.
using ReferenceFn = std::function<double(const Sequence&)>;

/// Σ_w p̃(w)·ln(p̃(w)/ref(w)) over the empirical support of `samples`.
/// Throws PreconditionError for an empty sample or a sample with zero
/// reference probability.
double empirical_kl(std::span<const Sequence> samples, const ReferenceFn& ref);
double empirical_kl(std::span<const Sequence> samples, const ExactDistribution& ref);

/// KL against the unconstrained LM distribution (the evaluation proxy).
double empirical_kl_vs_lm(std::span<const Sequence> samples, const LanguageModel& lm);

/// ½·Σ|p̃(w) − ref(w)| over the union of supports.
double total_variation(std::span<const Sequence> samples, const ExactDistribution& ref);

/// Percentile bootstrap of the mean: `resamples` resamples with
/// replacement, quantiles by linear interpolation between order statistics.
/// Throws PreconditionError with fewer than two values.
std::pair<double, double> bootstrap_ci(std::span<const double> values, double level = 0.95,
                                       std::size_t resamples = 10'000, std::uint64_t seed = 0);

/// Linear-interpolation quantile of sorted data (q in [0, 1]).
double quantile_sorted(std::span<const double> sorted, double q);

struct ChiSquareResult {
  double statistic = 0.0;
  std::size_t dof = 0;
  double p_value = 1.0;
  std::size_t outside_support = 0;  // samples with zero expected probability
};

/// Pearson goodness-of-fit of `samples` against `expected`. Cells with an
/// expected count below `min_expected` are pooled into one cell (dropped if
/// the pool is still below it). Samples outside the support make p = 0.
ChiSquareResult chi_square_gof(std::span<const Sequence> samples, const ExactDistribution& expected,
                               double min_expected = 5.0);

/// Exact one-sided sign test: P(X ≥ wins) for X ~ Binomial(wins + losses, ½).
/// Ties are dropped by the caller.
double sign_test_p(std::size_t wins, std::size_t losses);

struct EfficiencyRow {
  std::string method;
  std::size_t runs = 0;
  std::size_t timeouts = 0;           // runs that never reached the target
  double mean_generations = 0.0;      // to reach target (cap for timeouts)
  /// (calls, cumulative accepted / calls) averaged over runs, at each call count.
  std::vector<std::pair<std::size_t, double>> success_rate;
};

/// Per-method mean generations to `target_valid` accepts and success-rate
/// curves, computed from the runs' cumulative-accept trajectories.
std::vector<EfficiencyRow> efficiency_summary(const std::map<std::string, std::vector<RunMetrics>>& runs,
                                              std::size_t target_valid);

/// Generation index (1-based) at which `target` accepts were first reached, if ever.
std::optional<std::size_t> generations_to_reach(const RunMetrics& m, std::size_t target);

/// CSV helpers. Doubles use 17 significant digits; missing values are empty.
void write_metrics_header(std::ostream& out);
void write_metrics_row(std::ostream& out, const std::string& method, std::uint64_t seed, const RunMetrics& m);
void write_trajectory_csv(std::ostream& out, const RunMetrics& m);
std::string format_double(double v);

}  // namespace cars
