#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cars/constraint.hpp"
#include "cars/language_model.hpp"
#include "cars/metrics.hpp"
#include "cars/rng.hpp"
#include "cars/trie.hpp"

namespace cars {

/// How a rejection-family sampler grows W after each generation.
enum class Strategy {
  RS,    // never updates W
  ARS,   // shortest invalid prefix of a rejected sample
  RSFT,  // every invalid first token
  CARS,  // shortest invalid prefix + every invalid one-token continuation of each visited viable prefix
};

std::string_view to_string(Strategy s);
/// Accepts "rs", "ars", "rsft", "cars" (case-insensitive).
std::optional<Strategy> parse_strategy(std::string_view name);

struct SamplerConfig {
  Strategy strategy = Strategy::CARS;
  std::uint64_t seed = 0;
  std::size_t max_len = 0;        // must equal the LM horizon
  std::size_t sample_cap = 2000;  // max generations per run
  std::size_t target_valid = 0;   // stop after this many accepts; 0 = run to the cap
  bool verify_updates = true;     // check every inserted prefix against the checker
};

/// One generation from R^W, with everything needed to update W afterwards.
struct SampleTrace {
  Sequence tokens;
  bool accepted = false;
  std::vector<NextTokenDistribution> step_dists;  // one per emitted token
  std::vector<ViabilityMask> step_masks;          // for each viable prefix visited
  std::size_t lm_calls = 0;
};

/// A prefix to add to W together with the edge probabilities along it.
struct InvalidPrefix {
  TokenString prefix;
  std::vector<double> edge_probs;
};

/// Draws w ~ R^W token by token: at prefix u the next token is drawn by
/// inverse CDF from P(ua|u)·p_ua/p_u, one uniform per step.
SampleTrace sample_one(const LanguageModel& lm, const ConstraintChecker& checker,
                       const InvalidPrefixTrie& trie, const SamplerConfig& cfg, CounterRng& rng);

/// Prefixes `strategy` derives from `trace`. Edge probabilities come from the
/// trace's recorded distributions; no LM queries are made.
std::vector<InvalidPrefix> invalid_set(const SampleTrace& trace, Strategy strategy);

/// Per-generation record kept for sample dumps.
struct GenerationRecord {
  Sequence tokens;
  bool accepted = false;
  std::size_t lm_calls = 0;
};

struct RunResult {
  std::vector<Sequence> accepted;
  std::vector<GenerationRecord> generations;
  RunMetrics metrics;
  std::size_t generations_to_target = 0;  // 0 if the target was not reached
  std::size_t gcd_discards = 0;           // GCD only
  bool exhausted = false;                 // p_ε reached 0: L has no mass
};

using IterationObserver = std::function<void(std::size_t iteration, const InvalidPrefixTrie& trie)>;

/// The adaptive loop: sample, yield if accepted, add the strategy's invalid
/// prefixes to W. Stops at `cfg.sample_cap` generations or once
/// `cfg.target_valid` samples were accepted. Throws ConsistencyError if p_ε
/// ever increases by more than 1e-12.
///
/// With `shared_trie` the run updates an external W (several runs may share
/// one); otherwise it owns a fresh one.
RunResult run(const LanguageModel& lm, const ConstraintChecker& checker, const SamplerConfig& cfg,
              InvalidPrefixTrie* shared_trie = nullptr, const IterationObserver& observer = {});

/// Outcome of one greedy-constrained-decoding attempt.
struct GcdOutcome {
  std::optional<Sequence> sample;  // nullopt when discarded
  std::size_t lm_calls = 0;
};

/// Greedy constrained decoding: mask non-viable tokens, renormalize, draw.
/// A draw is discarded when the masked distribution has no mass (e.g. the
/// horizon forces eos while u$ ∉ L). Throws ConsistencyError if the checker
/// reports an all-false mask at a viable prefix.
GcdOutcome gcd_sample(const LanguageModel& lm, const ConstraintChecker& checker,
                      const SamplerConfig& cfg, CounterRng& rng);

/// Repeats gcd_sample until `target_valid` samples (or `sample_cap` attempts).
/// Every attempt counts as a generation; p_ε trajectory is left empty.
RunResult run_gcd(const LanguageModel& lm, const ConstraintChecker& checker, const SamplerConfig& cfg);

}  // namespace cars
