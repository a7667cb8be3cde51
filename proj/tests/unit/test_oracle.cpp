#include <doctest.h>

#include <random>

#include "cars/errors.hpp"
#include "cars/oracle.hpp"
#include "cars/trie.hpp"
#include "test_support.hpp"

using namespace cars;
using cars::testing::fixture_checker;
using cars::testing::fixture_lm;
using cars::testing::ids;
using cars::testing::seq;

// Reference values below come from tests/oracles/reference_values.py
// (exact rational enumeration of the fixture files).

TEST_CASE("fig1 enumeration") {
  auto lm = fixture_lm("fig1.json");
  const auto& v = lm->vocabulary();
  const auto dist = enumerate_lm(*lm);
  CHECK(dist.total == doctest::Approx(1.0).epsilon(1e-12));
  double under = 0.0;
  for (const auto& [w, p] : dist.table) {
    if (is_prefix_of(ids(v, "0++"), w.ids())) under += p;
  }
  CHECK(std::abs(under - 0.091125) <= 1e-12);
  CHECK(dist.probability(seq(v, "1$")) == doctest::Approx(0.0625).epsilon(1e-14));
  CHECK(dist.probability(seq(v, "0$")) == 0.0);
  CHECK_FALSE(dist.table.count(seq(v, "0$")));
}

TEST_CASE("fig1 conditioned on the ex1 grammar") {
  auto lm = fixture_lm("fig1.json");
  const auto& v = lm->vocabulary();
  auto checker = fixture_checker("ex1.g", v);
  const auto dist = enumerate_lm(*lm);
  CHECK(language_mass(dist, *checker) == doctest::Approx(0.1027182).epsilon(1e-12));
  const auto target = condition(dist, *checker);
  CHECK(target.table.size() == 29);
  CHECK(target.total == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(target.probability(seq(v, "1$")) == doctest::Approx(0.6084608180439299).epsilon(1e-12));
  CHECK(target.probability(seq(v, "0+0$")) == doctest::Approx(0.14785597878467496).epsilon(1e-12));
  CHECK(target.probability(seq(v, "0+1$")) == doctest::Approx(0.1232133156538958).epsilon(1e-12));
}

TEST_CASE("two-word instance") {
  auto lm = fixture_lm("two_word.json");
  const auto& v = lm->vocabulary();
  auto checker = fixture_checker("two_word.dfa", v);
  const auto target = condition(enumerate_lm(*lm), *checker);
  CHECK(target.probability(seq(v, "a$")) == doctest::Approx(50.0 / 53.0).epsilon(1e-14));
}

TEST_CASE("conditioning on the trivial constraint is the identity") {
  auto lm = fixture_lm("fig1.json");
  auto checker = trivial_checker(lm->vocabulary());
  const auto dist = enumerate_lm(*lm);
  const auto cond = condition(dist, *checker);
  REQUIRE(cond.table.size() == dist.table.size());
  for (const auto& [w, p] : dist.table) CHECK(cond.probability(w) == doctest::Approx(p).epsilon(1e-12));
}

TEST_CASE("empty intersection and guard") {
  auto lm = fixture_lm("fig1.json");
  auto checker = fixture_checker("no_match.g", lm->vocabulary());
  const auto dist = enumerate_lm(*lm);
  CHECK_THROWS_AS(condition(dist, *checker), EmptyLanguageError);
  CHECK_THROWS_AS(enumerate_lm(*lm, 1000), PreconditionError);
}

TEST_CASE("exact_p") {
  auto lm = fixture_lm("fig1.json");
  const auto& v = lm->vocabulary();
  const auto dist = enumerate_lm(*lm);
  SUBCASE("empty W") {
    for (const char* u : {"", "1", "0+", "1+1+"}) CHECK(exact_p(ids(v, u), {}, dist) == doctest::Approx(1.0));
  }
  SUBCASE("W = {0++}") {
    const std::vector<TokenString> W{ids(v, "0++")};
    CHECK(std::abs(exact_p({}, W, dist) - 0.908875) <= 1e-12);
    CHECK(std::abs(exact_p({}, W, *lm) - 0.908875) <= 1e-12);
    CHECK(exact_p(ids(v, "0++1"), W, dist) == 0.0);
  }
  SUBCASE("zero-probability prefix needs the LM variant") {
    CHECK_THROWS_AS(exact_p(ids(v, "0$"), {}, dist), PreconditionError);
    CHECK(exact_p(ids(v, "0$"), {}, *lm) == 1.0);
  }
}

TEST_CASE("exact_p agrees with the trie for random W") {
  std::mt19937_64 rng(1234);
  auto lm = cars::testing::random_lm(rng, 3, 5);
  const auto dist = enumerate_lm(*lm);
  std::uniform_int_distribution<int> len(1, 4), tok(0, 2);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<TokenString> W;
    InvalidPrefixTrie trie;
    for (int k = 0; k < 5; ++k) {
      TokenString u;
      for (int i = len(rng); i > 0; --i) u.push_back(static_cast<TokenId>(tok(rng)));
      W.push_back(u);
      trie.insert_invalid(u, *lm);
    }
    const auto minimal = minimize_prefix_set(W);
    trie.for_each_node([&](std::span<const TokenId> u, double p, bool) {
      CHECK(std::abs(exact_p(u, minimal, dist) - p) <= 1e-9);
    });
  }
}

TEST_CASE("minimize_prefix_set") {
  const auto m = minimize_prefix_set({{0, 1, 2}, {0, 1}, {3}, {0, 1}, {3, 0}});
  CHECK(m == std::vector<TokenString>{{3}, {0, 1}});
}

TEST_CASE("dump format") {
  auto lm = fixture_lm("two_word.json");
  auto checker = fixture_checker("two_word.dfa", lm->vocabulary());
  const auto text = dump(condition(enumerate_lm(*lm), *checker), lm->vocabulary());
  CHECK(text == "a$\t0.94339622641509424\nbb$\t0.056603773584905655\n");
}
