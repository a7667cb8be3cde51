#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace cars {

using TokenId = std::int32_t;

/// Raw token-id string. May or may not end in eos; prefer `Sequence` when the
/// eos invariant matters.
using TokenString = std::vector<TokenId>;

struct TokenStringHash {
  std::size_t operator()(std::span<const TokenId> ids) const noexcept;
  std::size_t operator()(const TokenString& ids) const noexcept {
    return (*this)(std::span<const TokenId>(ids));
  }
};

/// Token alphabet with dense ids 0..size()-1 and one distinguished
/// end-of-sequence token. Non-eos tokens carry non-empty byte-string surfaces.
class Vocabulary {
 public:
  Vocabulary(std::vector<std::string> surfaces, TokenId eos);

  std::size_t size() const noexcept { return surfaces_.size(); }
  TokenId eos() const noexcept { return eos_; }
  bool is_eos(TokenId t) const noexcept { return t == eos_; }
  bool contains(TokenId t) const noexcept {
    return t >= 0 && static_cast<std::size_t>(t) < surfaces_.size();
  }

  const std::string& surface(TokenId t) const;
  std::optional<TokenId> find(std::string_view surface) const;

  /// Greedy longest-match segmentation of `text` into non-eos tokens.
  /// Throws FormatError if some byte cannot be covered.
  TokenString tokenize(std::string_view text) const;

  /// Concatenated surfaces; eos is rendered as "$".
  std::string render(std::span<const TokenId> ids) const;

  /// Display form that stays unambiguous with multi-byte tokens: surfaces
  /// joined by '|' when any surface is longer than one byte.
  std::string display(std::span<const TokenId> ids) const;

  bool operator==(const Vocabulary&) const = default;

 private:
  std::vector<std::string> surfaces_;
  TokenId eos_;
  std::unordered_map<std::string, TokenId> index_;
  std::size_t max_surface_len_ = 0;
};

/// A token string from Σ*$?: eos may appear only as the final id.
class Sequence {
 public:
  Sequence() = default;

  /// Validates the eos-position invariant against `eos`.
  Sequence(TokenString ids, TokenId eos);

  std::span<const TokenId> ids() const noexcept { return ids_; }
  const TokenString& tokens() const noexcept { return ids_; }
  bool terminated() const noexcept { return terminated_; }
  std::size_t size() const noexcept { return ids_.size(); }
  bool empty() const noexcept { return ids_.empty(); }

  /// The ids without a trailing eos.
  std::span<const TokenId> body() const noexcept {
    return std::span<const TokenId>(ids_).first(ids_.size() - (terminated_ ? 1 : 0));
  }

  friend bool operator==(const Sequence&, const Sequence&) = default;
  friend auto operator<=>(const Sequence& a, const Sequence& b) { return a.ids_ <=> b.ids_; }

 private:
  TokenString ids_;
  bool terminated_ = false;
};

struct SequenceHash {
  std::size_t operator()(const Sequence& s) const noexcept { return TokenStringHash{}(s.ids()); }
};

/// True iff `prefix` ⪯ `whole`.
bool is_prefix_of(std::span<const TokenId> prefix, std::span<const TokenId> whole) noexcept;

}  // namespace cars
