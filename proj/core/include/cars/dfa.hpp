#pragma once

#include <cstdint>
#include <memory>
#include <string_view>
#include <vector>

#include "cars/constraint.hpp"

namespace cars {

/// Explicit byte DFA. Missing transitions go to an implicit dead state.
struct DfaConstraint {
  static constexpr std::int32_t kDead = -1;

  std::size_t state_count = 0;
  std::int32_t start = 0;
  std::vector<bool> accepting;               // per state
  std::vector<bool> alphabet;                // 256 entries
  std::vector<std::int32_t> transitions;     // state_count * 256, kDead if absent

  std::int32_t next(std::int32_t s, std::uint8_t byte) const {
    return transitions[static_cast<std::size_t>(s) * 256 + byte];
  }

  /// States from which an accepting state is reachable (backward fixpoint).
  std::vector<bool> co_reachable() const;
};

/// Parses the `.dfa` table format:
///
///   # comment
///   states 3
///   start 0
///   accept 0 2
///   alphabet "01+"          (optional; defaults to the union of edge labels)
///   edge 0 1 "01"           (from, to, every byte of the label)
DfaConstraint parse_dfa(std::string_view source);

/// Recognizer that reports a byte string dead as soon as its state is no
/// longer co-reachable.
class DfaRecognizer final : public ByteRecognizer {
 public:
  explicit DfaRecognizer(DfaConstraint dfa);

  State start() const override;
  std::optional<State> advance(State s, std::uint8_t byte) const override;
  bool accepting(State s) const override;
  std::vector<bool> alphabet() const override { return dfa_.alphabet; }

  const DfaConstraint& dfa() const noexcept { return dfa_; }

 private:
  DfaConstraint dfa_;
  std::vector<bool> live_;
};

/// Throws EmptyLanguageError when no accepting state is reachable from the
/// start, and FormatError when a token uses a byte outside the alphabet.
std::unique_ptr<RecognizerChecker> dfa_checker(DfaConstraint dfa, const Vocabulary& vocab);

}  // namespace cars
