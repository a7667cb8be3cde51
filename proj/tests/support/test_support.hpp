#pragma once

#include <cmath>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cars/constraint.hpp"
#include "cars/dfa.hpp"
#include "cars/experiment.hpp"
#include "cars/language_model.hpp"
#include "cars/oracle.hpp"

namespace cars::testing {

inline std::filesystem::path fixture(std::string_view name) {
  return std::filesystem::path(CARS_FIXTURE_DIR) / name;
}

inline std::unique_ptr<LanguageModel> fixture_lm(std::string_view name) { return load_lm_file(fixture(name)); }

inline std::unique_ptr<ConstraintChecker> fixture_checker(std::string_view name, const Vocabulary& vocab) {
  return load_constraint_file(fixture(name), vocab);
}

/// "0+1$" → ids, mapping '$' to eos and every other char to its one-byte token.
inline TokenString ids(const Vocabulary& vocab, std::string_view text) {
  TokenString out;
  for (char c : text) {
    if (c == '$') {
      out.push_back(vocab.eos());
    } else {
      out.push_back(*vocab.find(std::string(1, c)));
    }
  }
  return out;
}

inline Sequence seq(const Vocabulary& vocab, std::string_view text) { return Sequence(ids(vocab, text), vocab.eos()); }

/// Vocabulary {a, b, c, ...} of `letters` one-byte tokens plus eos last.
inline Vocabulary letter_vocab(std::size_t letters) {
  std::vector<std::string> surfaces;
  for (std::size_t i = 0; i < letters; ++i) surfaces.emplace_back(1, static_cast<char>('a' + i));
  surfaces.emplace_back("$");
  return Vocabulary(surfaces, static_cast<TokenId>(letters));
}

/// Full-table LM with every context below the horizon drawn independently.
/// Probabilities are bounded away from zero by `floor`.
inline std::unique_ptr<TableLm> random_lm(std::mt19937_64& rng, std::size_t letters, std::size_t horizon,
                                          double floor = 0.02) {
  Vocabulary vocab = letter_vocab(letters);
  const std::size_t n = vocab.size();
  std::gamma_distribution<double> gamma(1.0, 1.0);
  auto draw = [&] {
    std::vector<double> p(n);
    double s = 0.0;
    for (auto& x : p) s += (x = gamma(rng) + floor);
    for (auto& x : p) x /= s;
    return NextTokenDistribution(std::move(p));
  };
  std::unordered_map<TokenString, NextTokenDistribution, TokenStringHash> table;
  std::vector<TokenString> frontier{{}};
  for (std::size_t depth = 0; depth < horizon; ++depth) {
    std::vector<TokenString> next;
    for (const auto& u : frontier) {
      table.emplace(u, draw());
      for (std::size_t a = 0; a < letters; ++a) {
        auto v = u;
        v.push_back(static_cast<TokenId>(a));
        next.push_back(std::move(v));
      }
    }
    frontier = std::move(next);
  }
  return std::make_unique<TableLm>(vocab, horizon, draw(), std::move(table));
}

/// Random DFA over the letters of `letter_vocab(letters)`.
inline DfaConstraint random_dfa(std::mt19937_64& rng, std::size_t letters, std::size_t states,
                                double edge_density = 0.7) {
  DfaConstraint d;
  d.state_count = states;
  d.start = 0;
  d.accepting.assign(states, false);
  d.alphabet.assign(256, false);
  d.transitions.assign(states * 256, DfaConstraint::kDead);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::int32_t> pick(0, static_cast<std::int32_t>(states) - 1);
  for (std::size_t a = 0; a < letters; ++a) d.alphabet['a' + a] = true;
  for (std::size_t s = 0; s < states; ++s) {
    d.accepting[s] = unit(rng) < 0.4;
    for (std::size_t a = 0; a < letters; ++a) {
      if (unit(rng) < edge_density) d.transitions[s * 256 + 'a' + a] = pick(rng);
    }
  }
  return d;
}

}  // namespace cars::testing
