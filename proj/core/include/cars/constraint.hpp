#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "cars/vocab.hpp"

namespace cars {

/// bit[a] ⇔ ua ∈ prefix(L). The eos bit means u$ ∈ L.
class ViabilityMask {
 public:
  ViabilityMask() = default;
  explicit ViabilityMask(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {}

  std::size_t size() const noexcept { return bits_.size(); }
  bool operator[](TokenId t) const { return bits_[static_cast<std::size_t>(t)] != 0; }
  bool any() const noexcept;
  std::size_t count() const noexcept;

  friend bool operator==(const ViabilityMask&, const ViabilityMask&) = default;

 private:
  std::vector<std::uint8_t> bits_;
};

/// Incremental membership oracle for a constraint L ⊆ Σ*$.
///
/// Implementations are immutable from the caller's point of view; internal
/// memo tables are synchronized.
class ConstraintChecker {
 public:
  explicit ConstraintChecker(Vocabulary vocab) : vocab_(std::move(vocab)) {}
  virtual ~ConstraintChecker() = default;

  ConstraintChecker(const ConstraintChecker&) = delete;
  ConstraintChecker& operator=(const ConstraintChecker&) = delete;

  const Vocabulary& vocabulary() const noexcept { return vocab_; }

  /// Mask for the next token after `u`. Throws PreconditionError if `u` is
  /// terminated or not itself viable: the sampler must never ask.
  virtual ViabilityMask viability_mask(std::span<const TokenId> u) const = 0;

  /// u ∈ prefix(L). `u` may end in eos, in which case this is membership.
  virtual bool is_viable(std::span<const TokenId> u) const = 0;

  /// w ∈ L for a terminated `w`.
  bool is_complete(const Sequence& w) const;

 private:
  Vocabulary vocab_;
};

/// Byte-level incremental recognizer. States are opaque handles; `advance`
/// returns nullopt as soon as the byte string read so far has left
/// prefix(language).
class ByteRecognizer {
 public:
  using State = std::uint32_t;

  virtual ~ByteRecognizer() = default;
  virtual State start() const = 0;
  virtual std::optional<State> advance(State s, std::uint8_t byte) const = 0;
  virtual bool accepting(State s) const = 0;
  /// Bytes the recognizer can ever consume. Token surfaces outside this set
  /// are rejected at checker construction.
  virtual std::vector<bool> alphabet() const = 0;
};

/// Lifts a byte recognizer to the token level: a token is viable iff all of
/// its surface bytes advance to a live state; eos is viable iff the current
/// state accepts. Masks and per-prefix states are memoized.
class RecognizerChecker final : public ConstraintChecker {
 public:
  /// With `allow_foreign_tokens` false, a token containing a byte outside the
  /// recognizer's alphabet is a FormatError; with it true such tokens are
  /// simply never viable.
  RecognizerChecker(std::shared_ptr<const ByteRecognizer> recognizer, Vocabulary vocab,
                    bool allow_foreign_tokens = false);

  ViabilityMask viability_mask(std::span<const TokenId> u) const override;
  bool is_viable(std::span<const TokenId> u) const override;

  std::size_t memoized_masks() const;

 private:
  std::optional<ByteRecognizer::State> state_of(std::span<const TokenId> u) const;
  std::optional<ByteRecognizer::State> step(ByteRecognizer::State s, TokenId t) const;

  std::shared_ptr<const ByteRecognizer> recognizer_;
  std::vector<bool> foreign_;

  mutable std::mutex mutex_;
  mutable std::unordered_map<TokenString, std::optional<ByteRecognizer::State>, TokenStringHash> states_;
  mutable std::unordered_map<TokenString, ViabilityMask, TokenStringHash> masks_;
};

/// The unrestricted constraint Σ*$.
std::unique_ptr<ConstraintChecker> trivial_checker(const Vocabulary& vocab);

}  // namespace cars
