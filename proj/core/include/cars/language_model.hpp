#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cars/vocab.hpp"

namespace cars {

/// P(·|u) over the full vocabulary, dense and indexed by token id.
///
/// Construction renormalizes so the entries sum to 1 within 1e-9. Entries
/// must be finite and non-negative, and at least one must be positive.
class NextTokenDistribution {
 public:
  explicit NextTokenDistribution(std::vector<double> probs);

  static NextTokenDistribution point_mass(std::size_t size, TokenId token);

  double operator[](TokenId t) const { return probs_[static_cast<std::size_t>(t)]; }
  std::size_t size() const noexcept { return probs_.size(); }
  std::span<const double> probs() const noexcept { return probs_; }

  friend bool operator==(const NextTokenDistribution&, const NextTokenDistribution&) = default;

 private:
  std::vector<double> probs_;
};

/// Autoregressive LM truncated at a fixed horizon: once a prefix holds
/// `horizon()` tokens the only continuation is eos, so the mass over Σ*$
/// sums to one.
///
/// Implementations are immutable after construction and safe to query from
/// several threads.
class LanguageModel {
 public:
  LanguageModel(Vocabulary vocab, std::size_t horizon);
  virtual ~LanguageModel() = default;

  LanguageModel(const LanguageModel&) = delete;
  LanguageModel& operator=(const LanguageModel&) = delete;

  const Vocabulary& vocabulary() const noexcept { return vocab_; }
  std::size_t horizon() const noexcept { return horizon_; }

  /// P(·|prefix). Throws PreconditionError when `prefix` contains eos or is
  /// longer than the horizon; returns the eos point mass at the horizon.
  NextTokenDistribution next_distribution(std::span<const TokenId> prefix) const;

 protected:
  /// Called only for eos-free prefixes strictly shorter than the horizon.
  virtual NextTokenDistribution conditional(std::span<const TokenId> prefix) const = 0;

 private:
  Vocabulary vocab_;
  std::size_t horizon_;
};

/// Π_i P(w_i | w_<i) for a terminated `w`, accumulated in log space.
double sequence_probability(const Sequence& w, const LanguageModel& lm);

/// Explicit context → distribution table with a fallback vector for every
/// context the table does not mention.
class TableLm final : public LanguageModel {
 public:
  TableLm(Vocabulary vocab, std::size_t horizon, NextTokenDistribution fallback,
          std::unordered_map<TokenString, NextTokenDistribution, TokenStringHash> table);

  /// Non-fatal issues raised while loading (e.g. renormalized vectors).
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }
  void add_warning(std::string w) { warnings_.push_back(std::move(w)); }

 protected:
  NextTokenDistribution conditional(std::span<const TokenId> prefix) const override;

 private:
  NextTokenDistribution fallback_;
  std::unordered_map<TokenString, NextTokenDistribution, TokenStringHash> table_;
  std::vector<std::string> warnings_;
};

/// Fixed-order n-gram LM with add-one smoothing, trained on a small corpus.
/// Contexts shorter than order-1 tokens are left-padded with a start marker.
class NgramLm final : public LanguageModel {
 public:
  NgramLm(Vocabulary vocab, std::size_t horizon, std::size_t order,
          const std::vector<std::string>& corpus);

  std::size_t order() const noexcept { return order_; }

 protected:
  NextTokenDistribution conditional(std::span<const TokenId> prefix) const override;

 private:
  TokenString context_of(std::span<const TokenId> prefix) const;

  std::size_t order_;
  std::unordered_map<TokenString, std::vector<std::size_t>, TokenStringHash> counts_;
};

/// Parse a table-LM JSON document:
///
///   {"type": "table", "vocabulary": ["0", "1", "+", "$"], "eos": 3,
///    "horizon": 7, "default": [...],
///    "contexts": [{"context": [0], "probs": [...]}, ...]}
///
/// Vectors off by more than 1e-6 are renormalized with a warning; vectors
/// off by more than 1e-3 are rejected. `horizon_override` > 0 replaces the
/// document's horizon.
std::unique_ptr<TableLm> load_table_lm(std::string_view document, std::size_t horizon_override = 0);

/// Parse an n-gram JSON document:
///   {"type": "ngram", "vocabulary": [...], "eos": 3, "horizon": 7,
///    "order": 2, "corpus": ["0+1", "1"]}
std::unique_ptr<NgramLm> load_ngram_lm(std::string_view document, std::size_t horizon_override = 0);

/// Reads a file and dispatches on its "type" field ("table" when absent).
std::unique_ptr<LanguageModel> load_lm_file(const std::filesystem::path& path,
                                            std::size_t horizon_override = 0);

/// Vocabulary-only JSON: {"vocabulary": [...], "eos": N}. Used with remote LMs.
Vocabulary load_vocabulary_file(const std::filesystem::path& path);

}  // namespace cars
