#include "cars/sampler.hpp"

#include <algorithm>
#include <cctype>

#include "cars/errors.hpp"

namespace cars {

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::RS: return "rs";
    case Strategy::ARS: return "ars";
    case Strategy::RSFT: return "rsft";
    case Strategy::CARS: return "cars";
  }
  return "?";
}

std::optional<Strategy> parse_strategy(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  for (Strategy s : {Strategy::RS, Strategy::ARS, Strategy::RSFT, Strategy::CARS}) {
    if (lower == to_string(s)) return s;
  }
  return std::nullopt;
}

namespace {

void check_config(const LanguageModel& lm, const SamplerConfig& cfg) {
  if (cfg.max_len != lm.horizon()) {
    throw PreconditionError("sampler max_len " + std::to_string(cfg.max_len) + " != LM horizon " +
                            std::to_string(lm.horizon()));
  }
  if (cfg.sample_cap == 0) throw PreconditionError("sample_cap must be at least 1");
}

}  // namespace

SampleTrace sample_one(const LanguageModel& lm, const ConstraintChecker& checker,
                       const InvalidPrefixTrie& trie, const SamplerConfig& cfg, CounterRng& rng) {
  check_config(lm, cfg);
  const TokenId eos = lm.vocabulary().eos();
  SampleTrace trace;

  auto lock = trie.read_lock();
  auto cursor = trie.cursor();
  if (!(cursor.p() > 0.0)) throw EmptyLanguageError("p_ε = 0: every sequence is covered by W");

  TokenString u;
  bool viable = true;
  for (;;) {
    auto dist = lm.next_distribution(u);
    ++trace.lm_calls;
    if (viable) trace.step_masks.push_back(checker.viability_mask(u));
    const auto factors = cursor.factors(dist);
    const auto a = static_cast<TokenId>(inverse_cdf(factors, rng.uniform()));
    trace.step_dists.push_back(std::move(dist));
    if (viable && !trace.step_masks.back()[a]) viable = false;
    u.push_back(a);
    cursor.advance(a);
    if (a == eos) break;
  }
  trace.tokens = Sequence(std::move(u), eos);
  trace.accepted = viable;
  return trace;
}

std::vector<InvalidPrefix> invalid_set(const SampleTrace& trace, Strategy strategy) {
  std::vector<InvalidPrefix> out;
  if (strategy == Strategy::RS) return out;

  const auto tokens = trace.tokens.ids();
  const auto& masks = trace.step_masks;
  if (masks.empty()) return out;
  if (masks.size() > tokens.size() || trace.step_dists.size() != tokens.size()) {
    throw PreconditionError("trace has inconsistent step records");
  }

  std::optional<std::size_t> first_invalid;
  for (std::size_t i = 0; i < masks.size(); ++i) {
    if (!masks[i][tokens[i]]) {
      first_invalid = i;
      break;
    }
  }

  auto along = [&](std::size_t i, TokenId a) {
    InvalidPrefix ip;
    ip.prefix.assign(tokens.begin(), tokens.begin() + static_cast<std::ptrdiff_t>(i));
    ip.prefix.push_back(a);
    for (std::size_t k = 0; k < i; ++k) ip.edge_probs.push_back(trace.step_dists[k][tokens[k]]);
    ip.edge_probs.push_back(trace.step_dists[i][a]);
    return ip;
  };

  switch (strategy) {
    case Strategy::RS:
      break;
    case Strategy::ARS:
      if (first_invalid) out.push_back(along(*first_invalid, tokens[*first_invalid]));
      break;
    case Strategy::RSFT:
      for (std::size_t a = 0; a < masks[0].size(); ++a) {
        if (!masks[0][static_cast<TokenId>(a)]) out.push_back(along(0, static_cast<TokenId>(a)));
      }
      break;
    case Strategy::CARS:
      if (first_invalid) out.push_back(along(*first_invalid, tokens[*first_invalid]));
      for (std::size_t i = 0; i < masks.size(); ++i) {
        for (std::size_t a = 0; a < masks[i].size(); ++a) {
          const auto id = static_cast<TokenId>(a);
          if (masks[i][id]) continue;
          if (first_invalid && i == *first_invalid && id == tokens[i]) continue;
          out.push_back(along(i, id));
        }
      }
      break;
  }
  return out;
}

RunResult run(const LanguageModel& lm, const ConstraintChecker& checker, const SamplerConfig& cfg,
              InvalidPrefixTrie* shared_trie, const IterationObserver& observer) {
  check_config(lm, cfg);
  InvalidPrefixTrie owned;
  InvalidPrefixTrie& trie = shared_trie ? *shared_trie : owned;
  CounterRng rng(cfg.seed);
  RunResult result;
  auto& m = result.metrics;

  double previous = trie.p_root();
  for (std::size_t gen = 0; gen < cfg.sample_cap; ++gen) {
    if (!(trie.p_root() > 0.0)) {
      result.exhausted = true;
      break;
    }
    SampleTrace trace = sample_one(lm, checker, trie, cfg, rng);
    ++m.generations;
    m.lm_calls += trace.lm_calls;
    if (trace.accepted) {
      ++m.accepted;
      result.accepted.push_back(trace.tokens);
      if (cfg.target_valid > 0 && m.accepted == cfg.target_valid) result.generations_to_target = gen + 1;
    }

    for (const auto& ip : invalid_set(trace, cfg.strategy)) {
      if (cfg.verify_updates && checker.is_viable(ip.prefix)) {
        throw ConsistencyError("strategy " + std::string(to_string(cfg.strategy)) +
                               " emitted a viable prefix '" + lm.vocabulary().display(ip.prefix) + "'");
      }
      trie.insert_invalid(ip.prefix, ip.edge_probs);
    }

    const double p_eps = trie.p_root();
    if (p_eps > previous + 1e-12) {
      throw ConsistencyError("p_ε increased from " + std::to_string(previous) + " to " + std::to_string(p_eps));
    }
    previous = p_eps;
    m.p_eps_trajectory.push_back(p_eps);
    m.cumulative_accepts.push_back(m.accepted);
    result.generations.push_back({std::move(trace.tokens), trace.accepted, trace.lm_calls});
    if (observer) observer(gen + 1, trie);
    if (cfg.target_valid > 0 && m.accepted >= cfg.target_valid) break;
  }
  return result;
}

GcdOutcome gcd_sample(const LanguageModel& lm, const ConstraintChecker& checker, const SamplerConfig& cfg,
                      CounterRng& rng) {
  check_config(lm, cfg);
  const TokenId eos = lm.vocabulary().eos();
  GcdOutcome out;
  TokenString u;
  std::vector<double> weights(lm.vocabulary().size());
  for (;;) {
    const auto dist = lm.next_distribution(u);
    ++out.lm_calls;
    const auto mask = checker.viability_mask(u);
    if (!mask.any()) {
      throw ConsistencyError("all-false viability mask at viable prefix '" + lm.vocabulary().display(u) + "'");
    }
    double total = 0.0;
    for (std::size_t a = 0; a < weights.size(); ++a) {
      weights[a] = mask[static_cast<TokenId>(a)] ? dist.probs()[a] : 0.0;
      total += weights[a];
    }
    if (!(total > 0.0)) return out;  // discarded: no viable token has mass here
    const auto a = static_cast<TokenId>(inverse_cdf(weights, rng.uniform()));
    u.push_back(a);
    if (a == eos) break;
  }
  out.sample = Sequence(std::move(u), eos);
  return out;
}

RunResult run_gcd(const LanguageModel& lm, const ConstraintChecker& checker, const SamplerConfig& cfg) {
  check_config(lm, cfg);
  CounterRng rng(cfg.seed);
  RunResult result;
  auto& m = result.metrics;
  for (std::size_t gen = 0; gen < cfg.sample_cap; ++gen) {
    auto outcome = gcd_sample(lm, checker, cfg, rng);
    ++m.generations;
    m.lm_calls += outcome.lm_calls;
    if (outcome.sample) {
      ++m.accepted;
      result.accepted.push_back(*outcome.sample);
      result.generations.push_back({std::move(*outcome.sample), true, outcome.lm_calls});
      if (cfg.target_valid > 0 && m.accepted == cfg.target_valid) result.generations_to_target = gen + 1;
    } else {
      ++result.gcd_discards;
      result.generations.push_back({Sequence(), false, outcome.lm_calls});
    }
    m.cumulative_accepts.push_back(m.accepted);
    if (cfg.target_valid > 0 && m.accepted >= cfg.target_valid) break;
  }
  return result;
}

}  // namespace cars
