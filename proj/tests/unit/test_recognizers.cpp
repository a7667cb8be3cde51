#include <doctest.h>

#include <functional>
#include <random>
#include <set>

#include "cars/dfa.hpp"
#include "cars/earley.hpp"
#include "cars/errors.hpp"
#include "cars/grammar.hpp"
#include "test_support.hpp"

using namespace cars;
using cars::testing::fixture_checker;
using cars::testing::ids;
using cars::testing::seq;

namespace {

Vocabulary arith_vocab() { return Vocabulary({"0", "1", "+", "$"}, 3); }

std::vector<bool> mask_bits(const ViabilityMask& m) {
  std::vector<bool> out;
  for (std::size_t i = 0; i < m.size(); ++i) out.push_back(m[static_cast<TokenId>(i)]);
  return out;
}

bool accepts(const ByteRecognizer& r, std::string_view s) {
  auto st = std::optional(r.start());
  for (char c : s) {
    st = r.advance(*st, static_cast<std::uint8_t>(c));
    if (!st) return false;
  }
  return r.accepting(*st);
}

bool live(const ByteRecognizer& r, std::string_view s) {
  auto st = std::optional(r.start());
  for (char c : s) {
    st = r.advance(*st, static_cast<std::uint8_t>(c));
    if (!st) return false;
  }
  return true;
}

// All strings of length ≤ n derivable from each nonterminal, by fixpoint.
std::vector<std::set<std::string>> bounded_language(const Grammar& g, std::size_t n) {
  std::vector<std::set<std::string>> lang(g.nonterminals.size());
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& p : g.productions) {
      std::set<std::string> cur{""};
      for (const auto& sym : p.rhs) {
        std::set<std::string> next;
        for (const auto& head : cur) {
          if (sym.is_terminal()) {
            if (head.size() == n) continue;
            for (int b = 0; b < 256; ++b) {
              if (g.terminals[sym.index][static_cast<std::size_t>(b)]) next.insert(head + static_cast<char>(b));
            }
          } else {
            for (const auto& tail : lang[sym.index]) {
              if (head.size() + tail.size() <= n) next.insert(head + tail);
            }
          }
        }
        cur = std::move(next);
      }
      for (auto& s : cur) changed |= lang[p.lhs].insert(s).second;
    }
  }
  return lang;
}

std::vector<std::string> all_strings(std::string_view alphabet, std::size_t max_len) {
  std::vector<std::string> out{""};
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i].size() == max_len) continue;
    for (char c : alphabet) out.push_back(out[i] + c);
  }
  return out;
}

Grammar random_grammar(std::mt19937_64& rng) {
  Grammar g;
  std::uniform_int_distribution<int> n_nt(1, 3), n_prod(1, 3), len(0, 3), coin(0, 2);
  const int nts = n_nt(rng);
  for (int i = 0; i < nts; ++i) g.nonterminals.push_back("N" + std::to_string(i));
  ByteClass a, b;
  a.set('a');
  b.set('b');
  const auto ta = g.add_terminal(a), tb = g.add_terminal(b);
  std::uniform_int_distribution<int> pick_nt(0, nts - 1);
  for (int i = 0; i < nts; ++i) {
    const int prods = n_prod(rng);
    for (int k = 0; k < prods; ++k) {
      Production p{static_cast<std::size_t>(i), {}};
      const int l = len(rng);
      for (int j = 0; j < l; ++j) {
        const int c = coin(rng);
        if (c == 0) p.rhs.push_back(GrammarSymbol::terminal(ta));
        if (c == 1) p.rhs.push_back(GrammarSymbol::terminal(tb));
        if (c == 2) p.rhs.push_back(GrammarSymbol::nonterminal(static_cast<std::size_t>(pick_nt(rng))));
      }
      g.productions.push_back(std::move(p));
    }
  }
  return g;
}

}  // namespace

TEST_CASE("ex1 masks and membership") {
  const auto vocab = arith_vocab();
  auto checker = fixture_checker("ex1.g", vocab);
  CHECK(mask_bits(checker->viability_mask({})) == std::vector<bool>{true, true, false, false});
  CHECK(mask_bits(checker->viability_mask(ids(vocab, "0+"))) == std::vector<bool>{true, true, false, false});
  CHECK(mask_bits(checker->viability_mask(ids(vocab, "0"))) == std::vector<bool>{false, false, true, true});
  CHECK(checker->is_complete(seq(vocab, "1+0+1$")));
  CHECK_FALSE(checker->is_complete(seq(vocab, "0++$")));
  CHECK_FALSE(checker->is_complete(seq(vocab, "+1$")));
  CHECK_FALSE(checker->is_complete(seq(vocab, "$")));
  CHECK_FALSE(checker->is_viable(ids(vocab, "0++")));
  CHECK(checker->is_viable(ids(vocab, "0+")));
  CHECK_THROWS_AS(checker->viability_mask(ids(vocab, "0++")), PreconditionError);
  CHECK_THROWS_AS(checker->viability_mask(ids(vocab, "0$")), PreconditionError);
}

TEST_CASE("ex1 grammar and DFA agree on every string up to length 6") {
  const auto vocab = arith_vocab();
  auto g = fixture_checker("ex1.g", vocab);
  auto d = fixture_checker("ex1.dfa", vocab);
  for (const auto& s : all_strings("01+", 6)) {
    const auto u = ids(vocab, s);
    CHECK(g->is_viable(u) == d->is_viable(u));
    auto w = u;
    w.push_back(vocab.eos());
    CHECK(g->is_viable(w) == d->is_viable(w));
    if (g->is_viable(u)) CHECK(g->viability_mask(u) == d->viability_mask(u));
  }
}

TEST_CASE("multi-byte tokens") {
  Vocabulary vocab({"0", "1", "+", "0+", "+1", "$"}, 5);
  auto checker = fixture_checker("ex1.g", vocab);
  CHECK(mask_bits(checker->viability_mask({})) == std::vector<bool>{true, true, false, true, false, false});
  CHECK(mask_bits(checker->viability_mask(ids(vocab, "1"))) ==
        std::vector<bool>{false, false, true, false, true, true});
  CHECK(checker->is_complete(Sequence({3, 1, 5}, 5)));
  CHECK_FALSE(checker->is_viable(TokenString{3, 4}));  // "0++1"
}

TEST_CASE("tokens outside the constraint alphabet") {
  Vocabulary vocab({"0", "1", "+", "x", "$"}, 4);
  CHECK_THROWS_AS(fixture_checker("ex1.g", vocab), FormatError);
  const auto parsed = parse_grammar(R"(expr : "0".."9" | "0".."9" "+" expr)");
  auto lenient = earley_checker(parsed.grammar, vocab, {.allow_foreign_tokens = true});
  CHECK_FALSE(lenient->viability_mask({})[3]);
}

TEST_CASE("Earley handles nullable and left-recursive rules") {
  const auto vocab = Vocabulary({"a", "b", "x", "y", "$"}, 4);
  SUBCASE("left recursion with epsilon") {
    auto c = earley_checker(parse_grammar(R"(s : s "a" | "")").grammar, vocab, {.allow_foreign_tokens = true});
    CHECK(c->is_complete(Sequence({4}, 4)));
    CHECK(c->is_complete(Sequence({0, 0, 0, 4}, 4)));
    CHECK_FALSE(c->is_viable(TokenString{1}));
  }
  SUBCASE("nullable chain") {
    auto c = earley_checker(parse_grammar(R"(
      s : a b
      a : "" | "x"
      b : a a "y"
    )").grammar,
                            vocab, {.allow_foreign_tokens = true});
    for (const char* ok : {"y", "xy", "xxy", "xxxy"}) {
      auto u = ids(vocab, ok);
      u.push_back(4);
      CHECK(c->is_viable(u));
    }
    CHECK_FALSE(c->is_viable(ids(vocab, "xxxx")));
  }
}

TEST_CASE("Earley agrees with bounded derivation enumeration on random grammars") {
  std::mt19937_64 rng(2024);
  int tested = 0;
  for (int trial = 0; trial < 300 && tested < 60; ++trial) {
    const Grammar raw = random_grammar(rng);
    ReducedGrammar reduced;
    try {
      reduced = reduce(raw);
    } catch (const EmptyLanguageError&) {
      continue;
    }
    ++tested;
    const EarleyRecognizer rec(reduced.grammar);
    const auto lang = bounded_language(reduced.grammar, 7)[reduced.grammar.start];
    std::set<std::string> prefixes;
    for (const auto& w : lang) {
      for (std::size_t k = 0; k <= w.size(); ++k) prefixes.insert(w.substr(0, k));
    }
    for (const auto& s : all_strings("ab", 6)) {
      INFO("string '" << s << "' grammar\n" << to_string(reduced.grammar));
      CHECK(accepts(rec, s) == (lang.count(s) == 1));
      if (prefixes.count(s)) CHECK(live(rec, s));
      if (!live(rec, s)) CHECK(prefixes.count(s) == 0);
      if (live(rec, s)) {
        // A live prefix always has a way forward.
        auto st = std::optional(rec.start());
        for (char c : s) st = rec.advance(*st, static_cast<std::uint8_t>(c));
        const bool forward = rec.accepting(*st) || rec.advance(*st, 'a') || rec.advance(*st, 'b');
        CHECK(forward);
      }
    }
  }
  CHECK(tested >= 30);
}

TEST_CASE("DFA parsing and co-reachability") {
  const auto d = parse_dfa(R"(
    # 0 -a-> 1 (accept), 0 -b-> 2 (trap)
    states 3
    start 0
    accept 1
    alphabet "ab"
    edge 0 1 "a"
    edge 0 2 "b"
    edge 2 2 "ab"
  )");
  CHECK(d.state_count == 3);
  const auto live = d.co_reachable();
  CHECK(live[0]);
  CHECK(live[1]);
  CHECK_FALSE(live[2]);
  CHECK_THROWS_AS(parse_dfa("states 2\nstart 5\n"), FormatError);
  CHECK_THROWS_AS(parse_dfa("states 2\nstart 0\nedge 0 7 \"a\"\n"), FormatError);
  CHECK_THROWS_AS(parse_dfa("bogus\n"), ParseError);
}

TEST_CASE("DFA with no reachable accepting state is an empty language") {
  auto d = parse_dfa("states 2\nstart 0\naccept 1\nalphabet \"a\"\nedge 0 0 \"a\"\n");
  CHECK_THROWS_AS(dfa_checker(d, Vocabulary({"a", "$"}, 1)), EmptyLanguageError);
}

TEST_CASE("DFA checker agrees with explicit path search on random automata") {
  std::mt19937_64 rng(7);
  const auto vocab = cars::testing::letter_vocab(3);
  int tested = 0;
  for (int trial = 0; trial < 200 && tested < 40; ++trial) {
    const auto d = cars::testing::random_dfa(rng, 3, 4);
    // Accept-reachability by DFS from each state, independent of co_reachable().
    auto reaches_accept = [&](std::int32_t s) {
      std::vector<bool> seen(d.state_count);
      std::function<bool(std::int32_t)> dfs = [&](std::int32_t x) {
        if (d.accepting[static_cast<std::size_t>(x)]) return true;
        seen[static_cast<std::size_t>(x)] = true;
        for (char c : std::string("abc")) {
          const auto y = d.next(x, static_cast<std::uint8_t>(c));
          if (y != DfaConstraint::kDead && !seen[static_cast<std::size_t>(y)] && dfs(y)) return true;
        }
        return false;
      };
      return dfs(s);
    };
    if (!reaches_accept(d.start)) continue;
    ++tested;
    auto checker = dfa_checker(d, vocab);
    for (const auto& s : all_strings("abc", 5)) {
      std::int32_t st = d.start;
      for (char c : s) {
        if (st != DfaConstraint::kDead) st = d.next(st, static_cast<std::uint8_t>(c));
      }
      // Every byte prefix must itself stay live, so walk again checking each step.
      bool viable = true;
      std::int32_t x = d.start;
      for (char c : s) {
        x = d.next(x, static_cast<std::uint8_t>(c));
        if (x == DfaConstraint::kDead || !reaches_accept(x)) {
          viable = false;
          break;
        }
      }
      const auto u = ids(vocab, s);
      CHECK(checker->is_viable(u) == viable);
      auto w = u;
      w.push_back(vocab.eos());
      CHECK(checker->is_viable(w) == (st != DfaConstraint::kDead && d.accepting[static_cast<std::size_t>(st)]));
    }
  }
  CHECK(tested >= 20);
}

TEST_CASE("trivial checker accepts everything") {
  const auto vocab = arith_vocab();
  auto t = trivial_checker(vocab);
  CHECK(t->viability_mask(ids(vocab, "++")).count() == 4);
  CHECK(t->is_complete(seq(vocab, "$")));
}

TEST_CASE("masks are memoized") {
  const auto vocab = arith_vocab();
  auto checker = cars::load_constraint_file(cars::testing::fixture("ex1.g"), vocab);
  auto* rc = dynamic_cast<RecognizerChecker*>(checker.get());
  REQUIRE(rc != nullptr);
  checker->viability_mask(ids(vocab, "0+"));
  const auto n = rc->memoized_masks();
  checker->viability_mask(ids(vocab, "0+"));
  CHECK(rc->memoized_masks() == n);
}
