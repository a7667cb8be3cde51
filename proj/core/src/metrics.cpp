#include "cars/metrics.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "cars/errors.hpp"
#include "cars/rng.hpp"

namespace cars {

namespace {

std::map<Sequence, std::size_t> count(std::span<const Sequence> samples) {
  std::map<Sequence, std::size_t> counts;
  for (const auto& s : samples) ++counts[s];
  return counts;
}

}  // namespace

double empirical_kl(std::span<const Sequence> samples, const ReferenceFn& ref) {
  if (samples.empty()) throw PreconditionError("empirical_kl needs at least one sample");
  const double n = static_cast<double>(samples.size());
  double kl = 0.0;
  for (const auto& [w, c] : count(samples)) {
    const double q = ref(w);
    if (!(q > 0.0)) throw PreconditionError("sample outside the reference support");
    const double p = static_cast<double>(c) / n;
    kl += p * std::log(p / q);
  }
  return std::max(kl, 0.0);
}

double empirical_kl(std::span<const Sequence> samples, const ExactDistribution& ref) {
  return empirical_kl(samples, [&ref](const Sequence& w) { return ref.probability(w); });
}

double empirical_kl_vs_lm(std::span<const Sequence> samples, const LanguageModel& lm) {
  if (samples.empty()) throw PreconditionError("empirical_kl needs at least one sample");
  const double n = static_cast<double>(samples.size());
  double kl = 0.0;
  for (const auto& [w, c] : count(samples)) {
    const double q = sequence_probability(w, lm);
    if (!(q > 0.0)) throw PreconditionError("sample outside the reference support");
    const double p = static_cast<double>(c) / n;
    kl += p * std::log(p / q);
  }
  return std::max(kl, 0.0);
}

double total_variation(std::span<const Sequence> samples, const ExactDistribution& ref) {
  if (samples.empty()) throw PreconditionError("total_variation needs at least one sample");
  const double n = static_cast<double>(samples.size());
  const auto counts = count(samples);
  double tv = 0.0;
  for (const auto& [w, q] : ref.table) {
    auto it = counts.find(w);
    const double p = it == counts.end() ? 0.0 : static_cast<double>(it->second) / n;
    tv += std::abs(p - q);
  }
  for (const auto& [w, c] : counts) {
    if (!ref.table.count(w)) tv += static_cast<double>(c) / n;
  }
  return std::min(1.0, 0.5 * tv);
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw PreconditionError("quantile of empty data");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

std::pair<double, double> bootstrap_ci(std::span<const double> values, double level, std::size_t resamples,
                                       std::uint64_t seed) {
  if (values.size() < 2) throw PreconditionError("bootstrap_ci needs at least two runs");
  if (!(level > 0.0 && level < 1.0)) throw PreconditionError("confidence level must be in (0, 1)");
  if (resamples == 0) throw PreconditionError("bootstrap needs at least one resample");
  CounterRng rng(seed);
  const std::size_t n = values.size();
  std::vector<double> means(resamples);
  for (auto& m : means) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += values[rng.below(n)];
    m = sum / static_cast<double>(n);
  }
  std::sort(means.begin(), means.end());
  const double alpha = (1.0 - level) / 2.0;
  return {quantile_sorted(means, alpha), quantile_sorted(means, 1.0 - alpha)};
}

ChiSquareResult chi_square_gof(std::span<const Sequence> samples, const ExactDistribution& expected,
                               double min_expected) {
  ChiSquareResult r;
  if (samples.empty()) throw PreconditionError("chi_square_gof needs samples");
  const double n = static_cast<double>(samples.size());
  const auto counts = count(samples);
  for (const auto& [w, c] : counts) {
    if (!(expected.probability(w) > 0.0)) r.outside_support += c;
  }
  if (r.outside_support > 0) {
    r.statistic = std::numeric_limits<double>::infinity();
    r.p_value = 0.0;
    return r;
  }
  std::size_t cells = 0;
  double pooled_expected = 0.0;
  double pooled_observed = 0.0;
  for (const auto& [w, q] : expected.table) {
    const double e = n * q / expected.total;
    auto it = counts.find(w);
    const double o = it == counts.end() ? 0.0 : static_cast<double>(it->second);
    if (e < min_expected) {
      pooled_expected += e;
      pooled_observed += o;
      continue;
    }
    r.statistic += (o - e) * (o - e) / e;
    ++cells;
  }
  if (pooled_expected >= min_expected) {
    r.statistic += (pooled_observed - pooled_expected) * (pooled_observed - pooled_expected) / pooled_expected;
    ++cells;
  }
  r.dof = cells > 0 ? cells - 1 : 0;
  if (r.dof == 0) {
    r.p_value = 1.0;
    return r;
  }
  boost::math::chi_squared dist(static_cast<double>(r.dof));
  r.p_value = boost::math::cdf(boost::math::complement(dist, r.statistic));
  return r;
}

double sign_test_p(std::size_t wins, std::size_t losses) {
  const std::size_t n = wins + losses;
  if (n == 0) return 1.0;
  double p = 0.0;
  for (std::size_t k = wins; k <= n; ++k) {
    const double log_term = std::lgamma(static_cast<double>(n) + 1) - std::lgamma(static_cast<double>(k) + 1) -
                            std::lgamma(static_cast<double>(n - k) + 1) - static_cast<double>(n) * std::log(2.0);
    p += std::exp(log_term);
  }
  return std::min(1.0, p);
}

std::optional<std::size_t> generations_to_reach(const RunMetrics& m, std::size_t target) {
  if (target == 0) return 0;
  auto it = std::find_if(m.cumulative_accepts.begin(), m.cumulative_accepts.end(),
                         [target](std::size_t c) { return c >= target; });
  if (it == m.cumulative_accepts.end()) return std::nullopt;
  return static_cast<std::size_t>(it - m.cumulative_accepts.begin()) + 1;
}

std::vector<EfficiencyRow> efficiency_summary(const std::map<std::string, std::vector<RunMetrics>>& runs,
                                              std::size_t target_valid) {
  std::vector<EfficiencyRow> rows;
  for (const auto& [method, list] : runs) {
    EfficiencyRow row;
    row.method = method;
    row.runs = list.size();
    double total = 0.0;
    std::size_t longest = 0;
    for (const auto& m : list) {
      if (auto g = generations_to_reach(m, target_valid)) {
        total += static_cast<double>(*g);
      } else {
        ++row.timeouts;
        total += static_cast<double>(m.generations);
      }
      longest = std::max(longest, m.cumulative_accepts.size());
    }
    row.mean_generations = list.empty() ? 0.0 : total / static_cast<double>(list.size());
    for (std::size_t c = 1; c <= longest; ++c) {
      double sum = 0.0;
      std::size_t k = 0;
      for (const auto& m : list) {
        if (m.cumulative_accepts.size() < c) continue;
        sum += static_cast<double>(m.cumulative_accepts[c - 1]) / static_cast<double>(c);
        ++k;
      }
      if (k > 0) row.success_rate.emplace_back(c, sum / static_cast<double>(k));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::string opt(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

}  // namespace

void write_metrics_header(std::ostream& out) {
  out << "method,seed,generations,accepted,kl_proxy,kl_oracle,tv_oracle,ci_low,ci_high\n";
}

void write_metrics_row(std::ostream& out, const std::string& method, std::uint64_t seed, const RunMetrics& m) {
  out << method << ',' << seed << ',' << m.generations << ',' << m.accepted << ',' << opt(m.kl_proxy) << ','
      << opt(m.kl_oracle) << ',' << opt(m.tv_oracle) << ','
      << (m.bootstrap_ci ? format_double(m.bootstrap_ci->first) : std::string()) << ','
      << (m.bootstrap_ci ? format_double(m.bootstrap_ci->second) : std::string()) << '\n';
}

void write_trajectory_csv(std::ostream& out, const RunMetrics& m) {
  out << "iteration,p_eps,cumulative_accepts\n";
  for (std::size_t i = 0; i < m.cumulative_accepts.size(); ++i) {
    out << (i + 1) << ',';
    if (i < m.p_eps_trajectory.size()) out << format_double(m.p_eps_trajectory[i]);
    out << ',' << m.cumulative_accepts[i] << '\n';
  }
}

}  // namespace cars
