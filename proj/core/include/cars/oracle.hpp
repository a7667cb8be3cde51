#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "cars/constraint.hpp"
#include "cars/language_model.hpp"

namespace cars {

/// Exact probability table over terminated sequences. Iteration (and
/// therefore summation) follows lexicographic token-id order.
struct ExactDistribution {
  std::map<Sequence, double> table;
  double total = 0.0;

  double probability(const Sequence& w) const;
};

inline constexpr std::size_t kOracleGuard = 10'000'000;

/// Every terminated w with |w| ≤ T+1 and P(w) > 0, by depth-first chain-rule
/// expansion with linear-space products. Throws PreconditionError when
/// |Σ_$|^T exceeds `guard`.
ExactDistribution enumerate_lm(const LanguageModel& lm, std::size_t guard = kOracleGuard);

/// P^L: the entries in L, renormalized. Throws EmptyLanguageError when no
/// entry is in L.
ExactDistribution condition(const ExactDistribution& dist, const ConstraintChecker& checker);

/// p_u = Σ_{w ∉ ext(W), u ⪯ w} P(w) / P(u), summed over the table. Requires
/// P(u) > 0 in the table (otherwise use the LM overload). W must be
/// pairwise prefix-free.
double exact_p(std::span<const TokenId> u, const std::vector<TokenString>& W, const ExactDistribution& dist);

/// Same quantity by direct depth-first expansion of the LM below u; works
/// for zero-probability u.
double exact_p(std::span<const TokenId> u, const std::vector<TokenString>& W, const LanguageModel& lm);

/// p_u for every prefix in `prefixes` in one pass over the table.
std::map<TokenString, double> exact_p_all(const std::vector<TokenString>& prefixes,
                                          const std::vector<TokenString>& W, const ExactDistribution& dist);

/// Drops every element of `W` that has a proper prefix (or duplicate) in
/// `W`, keeping the shortest members.
std::vector<TokenString> minimize_prefix_set(std::vector<TokenString> W);

/// "sequence<TAB>probability" lines in table order, 17 significant digits.
std::string dump(const ExactDistribution& dist, const Vocabulary& vocab);

/// Total mass of L under P, using the unnormalized table.
double language_mass(const ExactDistribution& dist, const ConstraintChecker& checker);

}  // namespace cars
