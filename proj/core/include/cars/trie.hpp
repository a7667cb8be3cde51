#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cars/language_model.hpp"
#include "cars/vocab.hpp"

namespace cars {

enum class InsertStatus {
  Inserted,        // new leaf; mass removed (possibly 0 for a zero-probability prefix)
  AlreadyCovered,  // u itself is already a leaf
  BelowLeaf,       // a proper prefix of u is a leaf: u ∈ ext(W) already
};

struct InsertResult {
  double mass_removed = 0.0;  // decrease of p_ε
  InsertStatus status = InsertStatus::Inserted;
};

/// The set W of known-invalid prefixes, stored as a trie over token ids.
///
/// Every tracked node u carries p_u, the probability that the LM continuing
/// from u produces a terminated sequence outside ext(W). Untracked sequences
/// have p = 1 (no invalid prefix below them) or p = 0 (inside ext(W)).
/// Leaves are the members of W and have p = 0.
///
/// Inserting u sets p_u to 0 and walks back to the root: when a child's p
/// drops by x, its parent's p drops by P(child | parent)·x. Values are
/// maintained incrementally; `max_local_inconsistency` recomputes them
/// bottom-up for debugging.
///
/// Thread safety: inserts take an exclusive lock, queries a shared lock. A
/// caller that needs several reads against one consistent state (the
/// sampler's left-to-right descent) holds `read_lock()` across them.
class InvalidPrefixTrie {
  struct Node;

 public:
  InvalidPrefixTrie();
  ~InvalidPrefixTrie();
  InvalidPrefixTrie(InvalidPrefixTrie&&) noexcept;
  InvalidPrefixTrie& operator=(InvalidPrefixTrie&&) noexcept;

  /// Adds u to W. `edge_probs[i]` = P(u[0..i] | u[0..i-1]). Edge
  /// probabilities seen before must agree within 1e-12 (ConsistencyError
  /// otherwise). Inserting a prefix of existing nodes prunes their subtree
  /// and propagates the node's previous p rather than P(u).
  InsertResult insert_invalid(std::span<const TokenId> u, std::span<const double> edge_probs);

  /// Convenience overload that queries `lm` along u.
  InsertResult insert_invalid(std::span<const TokenId> u, const LanguageModel& lm);

  double p_value(std::span<const TokenId> u) const;
  double p_root() const;

  /// a ↦ P(ua|u)·p_ua/p_u. Throws PreconditionError when p_u = 0 and
  /// ConsistencyError when the result does not sum to 1 within 1e-8.
  std::vector<double> reweight_factors(std::span<const TokenId> u, const NextTokenDistribution& dist) const;

  std::size_t node_count() const;
  std::size_t leaf_count() const;

  /// Depth-first dump, one line per tracked node: "prefix<TAB>p<TAB>leaf",
  /// prefix as comma-separated ids (empty for the root), p with 17
  /// significant digits, leaf as 0/1. Children in ascending id order.
  std::string snapshot() const;

  /// Rebuilds a trie from a snapshot by re-inserting its leaves; p values
  /// are re-derived from `lm`, not read back.
  static InvalidPrefixTrie from_snapshot(std::string_view text, const LanguageModel& lm);

  /// Visits every tracked node in depth-first id order.
  void for_each_node(const std::function<void(std::span<const TokenId> prefix, double p, bool leaf)>& fn) const;

  /// Max over internal nodes of |p − (1 − Σ_a edge(a)·(1 − p_child(a)))|.
  double max_local_inconsistency() const;

  std::shared_lock<std::shared_mutex> read_lock() const { return std::shared_lock(mutex_); }

  /// Stateful left-to-right walk used while sampling; caller must hold
  /// `read_lock()` for the cursor's lifetime.
  class Cursor {
   public:
    /// p of the current prefix.
    double p() const noexcept;
    /// Reweighted next-token factors at the current prefix.
    std::vector<double> factors(const NextTokenDistribution& dist) const;
    void advance(TokenId a);

   private:
    friend class InvalidPrefixTrie;
    explicit Cursor(const Node* node) : node_(node) {}
    const Node* node_;   // nullptr once we leave the tracked region
    bool dead_ = false;  // inside ext(W)
  };

  Cursor cursor() const;

 private:
  std::unique_ptr<Node> root_;
  std::size_t nodes_ = 1;
  std::size_t leaves_ = 0;
  mutable std::shared_mutex mutex_;

  double p_value_unlocked(std::span<const TokenId> u) const;
};

/// Tolerance used when comparing cached edge probabilities.
inline constexpr double kEdgeProbTolerance = 1e-12;
/// p values within this distance outside [0, 1] are clamped; further is an error.
inline constexpr double kClampTolerance = 1e-12;
/// Reweighted factors must sum to one within this tolerance.
inline constexpr double kReweightTolerance = 1e-8;

}  // namespace cars
