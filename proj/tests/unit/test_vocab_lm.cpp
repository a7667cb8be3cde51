#include <doctest.h>

#include <cmath>
#include <random>

#include "cars/errors.hpp"
#include "cars/language_model.hpp"
#include "cars/oracle.hpp"
#include "test_support.hpp"

using namespace cars;
using cars::testing::fixture;
using cars::testing::ids;
using cars::testing::seq;

TEST_CASE("vocabulary basics") {
  Vocabulary v({"0", "1", "+", "$"}, 3);
  CHECK(v.size() == 4);
  CHECK(v.is_eos(3));
  CHECK(v.find("+") == 2);
  CHECK_FALSE(v.find("x"));
  CHECK(v.render(ids(v, "0+1$")) == "0+1$");
  CHECK(v.tokenize("1+0") == TokenString{1, 2, 0});
  CHECK_THROWS_AS(v.tokenize("1-0"), FormatError);
  CHECK_THROWS_AS(Vocabulary({"a", "a", "$"}, 2), FormatError);
  CHECK_THROWS_AS(Vocabulary({"a", "b"}, 5), FormatError);
}

TEST_CASE("multi-byte tokens tokenize greedily and display with separators") {
  Vocabulary v({"ab", "a", "b", "<eos>"}, 3);
  CHECK(v.tokenize("abab") == TokenString{0, 0});
  CHECK(v.tokenize("aab") == TokenString{1, 0});
  CHECK(v.display(TokenString{1, 2, 3}) == "a|b|$");
}

TEST_CASE("sequence rejects eos before the end") {
  CHECK_NOTHROW(Sequence({0, 1, 3}, 3));
  CHECK_THROWS_AS(Sequence({0, 3, 1}, 3), PreconditionError);
  Sequence s({0, 1, 3}, 3);
  CHECK(s.terminated());
  CHECK(s.body().size() == 2);
  CHECK(is_prefix_of(TokenString{0}, s.ids()));
  CHECK_FALSE(is_prefix_of(TokenString{1}, s.ids()));
}

TEST_CASE("next-token distribution validation") {
  CHECK_THROWS_AS(NextTokenDistribution({0.5, -0.1, 0.6}), FormatError);
  CHECK_THROWS_AS(NextTokenDistribution({0.0, 0.0}), FormatError);
  CHECK_THROWS_AS(NextTokenDistribution({NAN, 1.0}), FormatError);
  NextTokenDistribution d({1.0, 3.0});
  CHECK(d[0] == doctest::Approx(0.25));
}

TEST_CASE("fig1 table LM reproduces the figure's edge probabilities") {
  auto lm = load_lm_file(fixture("fig1.json"));
  const auto& v = lm->vocabulary();
  const auto root = lm->next_distribution({});
  CHECK(root[*v.find("0")] == doctest::Approx(0.45).epsilon(1e-15));
  CHECK(root[*v.find("+")] + root[v.eos()] == doctest::Approx(0.3).epsilon(1e-15));
  const auto after0 = lm->next_distribution(ids(v, "0"));
  CHECK(after0[*v.find("+")] == doctest::Approx(0.45).epsilon(1e-15));
  CHECK(after0[0] + after0[1] == doctest::Approx(0.55).epsilon(1e-15));
  const auto after0p = lm->next_distribution(ids(v, "0+"));
  CHECK(after0p[*v.find("+")] == doctest::Approx(0.45).epsilon(1e-15));

  // 0.45 · 0.45 · 0.25 · 0.25 for "0+1$" (default row at "0+1").
  CHECK(sequence_probability(seq(v, "0+1$"), *lm) == doctest::Approx(0.45 * 0.25 * 0.25 * 0.45).epsilon(1e-12));
}

TEST_CASE("horizon forces eos and rejects longer prefixes") {
  auto lm = load_lm_file(fixture("fig1.json"));
  const TokenString at_horizon(7, 0);
  const auto d = lm->next_distribution(at_horizon);
  CHECK(d[3] == 1.0);
  CHECK_THROWS_AS(lm->next_distribution(TokenString(8, 0)), PreconditionError);
  CHECK_THROWS_AS(lm->next_distribution(TokenString{0, 3}), PreconditionError);
  CHECK_THROWS_AS(lm->next_distribution(TokenString{9}), PreconditionError);
}

TEST_CASE("table LM with uniform default") {
  auto lm = load_table_lm(R"({"vocabulary": ["a", "b", "c", "$"], "eos": 3, "horizon": 3,
                              "default": [0.25, 0.25, 0.25, 0.25]})");
  for (const TokenString& u : {TokenString{}, TokenString{0}, TokenString{2, 1}}) {
    const auto d = lm->next_distribution(u);
    for (TokenId a = 0; a < 4; ++a) CHECK(d[a] == 0.25);
  }
}

TEST_CASE("table LM loader: drift, dimension and format errors") {
  SUBCASE("small drift renormalizes with a warning") {
    auto lm = load_table_lm(R"({"vocabulary": ["a", "$"], "eos": 1, "horizon": 2,
                                "default": [0.5, 0.50001]})");
    CHECK(lm->warnings().size() == 1);
    CHECK(lm->next_distribution({})[0] + lm->next_distribution({})[1] == doctest::Approx(1.0).epsilon(1e-15));
  }
  SUBCASE("drift beyond 1e-3 is rejected") {
    CHECK_THROWS_AS(load_table_lm(R"({"vocabulary": ["a", "$"], "eos": 1, "horizon": 2,
                                      "default": [0.5, 0.6]})"),
                    FormatError);
  }
  SUBCASE("wrong vector length") {
    CHECK_THROWS_AS(load_table_lm(R"({"vocabulary": ["a", "$"], "eos": 1, "horizon": 2,
                                      "default": [1.0]})"),
                    FormatError);
  }
  SUBCASE("context containing eos") {
    CHECK_THROWS_AS(load_table_lm(R"({"vocabulary": ["a", "$"], "eos": 1, "horizon": 2,
                                      "default": [0.5, 0.5], "contexts": [{"context": [1], "probs": [1, 0]}]})"),
                    FormatError);
  }
  SUBCASE("malformed JSON") { CHECK_THROWS_AS(load_table_lm("{"), FormatError); }
}

TEST_CASE("bigram LM matches the add-one reference values") {
  // Exact fractions from tests/oracles/reference_values.py.
  auto lm = load_lm_file(fixture("bigram.json"));
  auto check = [&](const TokenString& u, std::vector<double> want) {
    const auto d = lm->next_distribution(u);
    for (TokenId a = 0; a < 4; ++a) CHECK(d[a] == doctest::Approx(want[a]).epsilon(1e-15));
  };
  check({}, {3.0 / 8, 3.0 / 8, 1.0 / 8, 1.0 / 8});
  check({0}, {1.0 / 7, 1.0 / 7, 4.0 / 7, 1.0 / 7});
  check({0, 2}, {1.0 / 4, 1.0 / 2, 1.0 / 8, 1.0 / 8});
  check({1}, {1.0 / 9, 1.0 / 9, 2.0 / 9, 5.0 / 9});
  CHECK(sequence_probability(seq(lm->vocabulary(), "0+1$"), *lm) == doctest::Approx(5.0 / 84).epsilon(1e-12));
}

TEST_CASE("enumerated mass sums to one on random table LMs") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 5; ++i) {
    auto lm = cars::testing::random_lm(rng, 1 + i % 4, 3 + i % 4);
    const auto dist = enumerate_lm(*lm);
    CHECK(dist.total == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("sequence probability is zero on a zero factor") {
  auto lm = load_lm_file(fixture("fig1.json"));
  CHECK(sequence_probability(seq(lm->vocabulary(), "0$"), *lm) == 0.0);
}
