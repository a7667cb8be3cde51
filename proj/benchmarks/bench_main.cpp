#include <benchmark/benchmark.h>

#include <filesystem>
#include <random>

#include "cars/experiment.hpp"
#include "cars/sampler.hpp"
#include "cars/trie.hpp"

namespace {

using namespace cars;

std::filesystem::path fixture(const char* name) { return std::filesystem::path(CARS_FIXTURE_DIR) / name; }

TokenString random_prefix(std::mt19937_64& rng, const Vocabulary& v, std::size_t max_len) {
  TokenString u;
  const std::size_t len = 1 + rng() % max_len;
  for (std::size_t i = 0; i < len; ++i) {
    const auto a = static_cast<TokenId>(rng() % v.size());
    u.push_back(a);
    if (a == v.eos()) break;
  }
  return u;
}

void BM_TrieInsert(benchmark::State& state) {
  auto lm = load_lm_file(fixture("fig1.json"));
  std::mt19937_64 rng(1);
  std::vector<TokenString> prefixes;
  for (int i = 0; i < 1024; ++i) prefixes.push_back(random_prefix(rng, lm->vocabulary(), lm->horizon()));
  for (auto _ : state) {
    InvalidPrefixTrie trie;
    for (const auto& u : prefixes) benchmark::DoNotOptimize(trie.insert_invalid(u, *lm));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(prefixes.size()));
}
BENCHMARK(BM_TrieInsert);

void BM_SampleOne(benchmark::State& state) {
  auto lm = load_lm_file(fixture("fig1.json"));
  auto checker = load_constraint_file(fixture("ex1.g"), lm->vocabulary());
  SamplerConfig cfg;
  cfg.max_len = lm->horizon();
  cfg.sample_cap = 200;
  InvalidPrefixTrie trie;
  run(*lm, *checker, cfg, &trie);
  CounterRng rng(3);
  for (auto _ : state) benchmark::DoNotOptimize(sample_one(*lm, *checker, trie, cfg, rng));
}
BENCHMARK(BM_SampleOne);

void BM_CarsRun(benchmark::State& state) {
  auto lm = load_lm_file(fixture("low_mass.json"));
  auto checker = load_constraint_file(fixture("ex1.g"), lm->vocabulary());
  SamplerConfig cfg;
  cfg.max_len = lm->horizon();
  cfg.target_valid = 100;
  cfg.sample_cap = 100'000;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    cfg.seed = ++seed;
    benchmark::DoNotOptimize(run(*lm, *checker, cfg));
  }
}
BENCHMARK(BM_CarsRun)->Unit(benchmark::kMillisecond);

void BM_EarleyMaskCold(benchmark::State& state) {
  auto vocab = load_lm_file(fixture("fig1.json"))->vocabulary();
  std::mt19937_64 rng(2);
  std::vector<TokenString> prefixes;
  for (int i = 0; i < 256; ++i) {
    TokenString u;
    for (int k = 0; k < 7; ++k) u.push_back(static_cast<TokenId>(k % 2 ? 2 : rng() % 2));
    prefixes.push_back(u);
  }
  for (auto _ : state) {
    auto checker = load_constraint_file(fixture("ex1.g"), vocab);
    for (const auto& u : prefixes) benchmark::DoNotOptimize(checker->viability_mask(u));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(prefixes.size()));
}
BENCHMARK(BM_EarleyMaskCold);

}  // namespace

BENCHMARK_MAIN();
