#include "cars/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "cars/errors.hpp"

namespace cars {

double ExactDistribution::probability(const Sequence& w) const {
  auto it = table.find(w);
  return it == table.end() ? 0.0 : it->second;
}

ExactDistribution enumerate_lm(const LanguageModel& lm, std::size_t guard) {
  const double bound = std::pow(static_cast<double>(lm.vocabulary().size()), static_cast<double>(lm.horizon()));
  if (bound > static_cast<double>(guard)) {
    throw PreconditionError("oracle guard exceeded: |vocab|^horizon = " + std::to_string(bound));
  }
  ExactDistribution out;
  const TokenId eos = lm.vocabulary().eos();
  TokenString prefix;
  auto expand = [&](auto&& self, double mass) -> void {
    const auto dist = lm.next_distribution(prefix);
    for (std::size_t a = 0; a < dist.size(); ++a) {
      const double p = mass * dist.probs()[a];
      if (p == 0.0) continue;
      prefix.push_back(static_cast<TokenId>(a));
      if (static_cast<TokenId>(a) == eos) {
        out.table.emplace(Sequence(prefix, eos), p);
      } else {
        self(self, p);
      }
      prefix.pop_back();
    }
  };
  expand(expand, 1.0);
  for (const auto& [_, p] : out.table) out.total += p;
  return out;
}

double language_mass(const ExactDistribution& dist, const ConstraintChecker& checker) {
  double mass = 0.0;
  for (const auto& [w, p] : dist.table) {
    if (checker.is_complete(w)) mass += p;
  }
  return mass;
}

ExactDistribution condition(const ExactDistribution& dist, const ConstraintChecker& checker) {
  ExactDistribution out;
  for (const auto& [w, p] : dist.table) {
    if (checker.is_complete(w)) {
      out.table.emplace(w, p);
      out.total += p;
    }
  }
  if (out.table.empty() || !(out.total > 0.0)) {
    throw EmptyLanguageError("no sequence in the distribution's support satisfies the constraint");
  }
  const double z = out.total;
  out.total = 0.0;
  for (auto& [_, p] : out.table) {
    p /= z;
    out.total += p;
  }
  return out;
}

namespace {

using PrefixSet = std::set<TokenString>;

bool in_ext(std::span<const TokenId> w, const PrefixSet& W) {
  if (W.count(TokenString())) return true;
  TokenString head;
  for (const TokenId t : w) {
    head.push_back(t);
    if (W.count(head)) return true;
  }
  return false;
}

}  // namespace

double exact_p(std::span<const TokenId> u, const std::vector<TokenString>& Wv, const ExactDistribution& dist) {
  const PrefixSet W(Wv.begin(), Wv.end());
  double under_u = 0.0;
  double avoiding = 0.0;
  for (const auto& [w, p] : dist.table) {
    if (!is_prefix_of(u, w.ids())) continue;
    under_u += p;
    if (!in_ext(w.ids(), W)) avoiding += p;
  }
  if (!(under_u > 0.0)) {
    // u itself may be in ext(W) even with zero mass.
    if (in_ext(u, W)) return 0.0;
    throw PreconditionError("exact_p: prefix has zero probability in the table");
  }
  return avoiding / under_u;
}

double exact_p(std::span<const TokenId> u, const std::vector<TokenString>& Wv, const LanguageModel& lm) {
  const PrefixSet W(Wv.begin(), Wv.end());
  const TokenId eos = lm.vocabulary().eos();
  if (in_ext(u, W)) return 0.0;
  if (!u.empty() && u.back() == eos) return 1.0;
  TokenString prefix(u.begin(), u.end());
  auto expand = [&](auto&& self) -> double {
    const auto dist = lm.next_distribution(prefix);
    double sum = 0.0;
    for (std::size_t a = 0; a < dist.size(); ++a) {
      const double q = dist.probs()[a];
      if (q == 0.0) continue;
      prefix.push_back(static_cast<TokenId>(a));
      if (!in_ext(prefix, W)) sum += q * (static_cast<TokenId>(a) == eos ? 1.0 : self(self));
      prefix.pop_back();
    }
    return sum;
  };
  return expand(expand);
}

std::map<TokenString, double> exact_p_all(const std::vector<TokenString>& prefixes,
                                          const std::vector<TokenString>& Wv, const ExactDistribution& dist) {
  const PrefixSet W(Wv.begin(), Wv.end());
  std::map<TokenString, std::pair<double, double>> acc;  // (under, avoiding)
  for (const auto& u : prefixes) acc.emplace(u, std::make_pair(0.0, 0.0));
  TokenString head;
  for (const auto& [w, p] : dist.table) {
    const bool avoid = !in_ext(w.ids(), W);
    head.clear();
    for (std::size_t k = 0; k <= w.size(); ++k) {
      if (auto it = acc.find(head); it != acc.end()) {
        it->second.first += p;
        if (avoid) it->second.second += p;
      }
      if (k < w.size()) head.push_back(w.ids()[k]);
    }
  }
  std::map<TokenString, double> out;
  for (const auto& [u, sums] : acc) {
    if (sums.first > 0.0) {
      out.emplace(u, sums.second / sums.first);
    } else if (in_ext(u, W)) {
      out.emplace(u, 0.0);
    }
  }
  return out;
}

std::vector<TokenString> minimize_prefix_set(std::vector<TokenString> W) {
  std::sort(W.begin(), W.end(), [](const TokenString& a, const TokenString& b) {
    return a.size() != b.size() ? a.size() < b.size() : a < b;
  });
  PrefixSet kept;
  std::vector<TokenString> out;
  for (auto& w : W) {
    if (in_ext(w, kept)) continue;
    kept.insert(w);
    out.push_back(std::move(w));
  }
  return out;
}

std::string dump(const ExactDistribution& dist, const Vocabulary& vocab) {
  std::string out;
  char buf[64];
  for (const auto& [w, p] : dist.table) {
    std::snprintf(buf, sizeof buf, "\t%.17g\n", p);
    out += vocab.display(w.ids());
    out += buf;
  }
  return out;
}

}  // namespace cars
