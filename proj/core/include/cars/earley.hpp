#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "cars/constraint.hpp"
#include "cars/grammar.hpp"

namespace cars {

/// Earley recognizer over bytes with Aycock-Horspool nullable handling.
///
/// Every distinct byte prefix gets one chart column, stored as a node in a
/// byte trie so columns are shared across all token prefixes that reach the
/// same bytes. A prefix is live iff its column is non-empty, which on a
/// reduced grammar is exactly membership in prefix(L).
class EarleyRecognizer final : public ByteRecognizer {
 public:
  /// `g` must already be reduced.
  explicit EarleyRecognizer(Grammar g);

  State start() const override { return 0; }
  std::optional<State> advance(State s, std::uint8_t byte) const override;
  bool accepting(State s) const override;
  std::vector<bool> alphabet() const override;

  const Grammar& grammar() const noexcept { return g_; }
  std::size_t column_count() const;

 private:
  struct Item {
    std::uint32_t production;
    std::uint32_t dot;
    std::uint32_t origin;  // column id where the item was predicted
  };

  struct Column {
    std::vector<Item> items;
    std::unordered_set<std::uint64_t> seen;
    std::unordered_map<std::uint8_t, std::int64_t> next;  // -1 = dead
    bool accepting = false;
  };

  static std::uint64_t key(const Item& it) {
    return (static_cast<std::uint64_t>(it.production) << 44) |
           (static_cast<std::uint64_t>(it.dot) << 32) | it.origin;
  }

  void add(Column& col, Item it) const;
  void close(std::uint32_t col_id) const;
  const GrammarSymbol* next_symbol(const Item& it) const;

  Grammar g_;
  std::size_t augmented_;  // index of S' → S
  std::vector<std::vector<std::uint32_t>> by_lhs_;
  std::vector<bool> nullable_;

  mutable std::mutex mutex_;
  mutable std::deque<Column> columns_;
};

struct EarleyOptions {
  bool allow_foreign_tokens = false;
};

/// Token-level checker for a grammar. Reduces `g` first; throws
/// EmptyLanguageError if nothing is left.
std::unique_ptr<RecognizerChecker> earley_checker(const Grammar& g, const Vocabulary& vocab,
                                                  EarleyOptions options = {});

}  // namespace cars
