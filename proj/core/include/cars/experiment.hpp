#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "cars/constraint.hpp"
#include "cars/language_model.hpp"

namespace cars {

/// Everything one experiment needs. Every field has a config-file key
/// (shown in brackets) and a CLI flag; flags override the file.
struct ExperimentConfig {
  std::string lm;                           // [lm] JSON file, or http(s) URL of a logits server
  std::filesystem::path vocab;              // [vocab] vocabulary JSON, required with a URL
  std::filesystem::path constraint;         // [constraint] .g or .dfa; empty = no constraint
  std::vector<std::string> methods{"rs", "ars", "rsft", "cars", "gcd"};  // [methods]
  std::vector<std::uint64_t> seeds{1};      // [seeds]
  std::size_t target_valid = 100;           // [target_valid]
  std::size_t sample_cap = 2000;            // [cap]
  std::size_t horizon = 0;                  // [horizon] 0 = the LM file's own
  std::filesystem::path out = "cars-out";   // [out]
  bool oracle = false;                      // [oracle]
  bool dump_trie = false;                   // [dump_trie]
  double timeout_seconds = 30.0;            // [timeout] remote LM only
};

/// Reads a JSON config. Relative paths are resolved against the file's
/// directory. Unknown keys are rejected.
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// Throws PreconditionError describing the first problem found.
void validate(const ExperimentConfig& cfg);

bool is_url(std::string_view s);

/// Builds the checker for a constraint file, choosing the format by
/// extension: `.g` grammar, `.dfa` automaton table.
std::unique_ptr<ConstraintChecker> load_constraint_file(const std::filesystem::path& path, const Vocabulary& vocab);

struct Instance {
  std::unique_ptr<LanguageModel> lm;
  std::unique_ptr<ConstraintChecker> checker;
};

Instance load_instance(const ExperimentConfig& cfg);

struct ExperimentSummary {
  std::size_t rows = 0;
  std::size_t timeouts = 0;  // runs that stopped short of target_valid
};

/// Runs every (method, seed) cell and writes into `cfg.out`:
///   metrics.csv, trajectory_<method>_seed<seed>.csv,
///   samples_<method>_seed<seed>.tsv, and with dump_trie
///   trie_<method>_seed<seed>_<iteration>.txt every 100 iterations.
/// Progress lines go to `log`.
ExperimentSummary run_experiment(const ExperimentConfig& cfg, std::ostream& log);

/// Support size, L-mass under P and the ten most likely members of P^L.
std::string oracle_report(const ExperimentConfig& cfg);

}  // namespace cars
