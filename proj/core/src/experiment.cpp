#include "cars/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <set>

#include "cars/dfa.hpp"
#include "cars/earley.hpp"
#include "cars/errors.hpp"
#include "cars/grammar.hpp"
#include "cars/metrics.hpp"
#include "cars/oracle.hpp"
#include "cars/remote_lm.hpp"
#include "cars/sampler.hpp"
#include "io_util.hpp"

namespace cars {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::set<std::string> kMethods{"rs", "ars", "rsft", "cars", "gcd"};

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() || p.empty() ? path : base / path;
}

}  // namespace

bool is_url(std::string_view s) { return s.starts_with("http://") || s.starts_with("https://"); }

ExperimentConfig load_experiment_config(const fs::path& path) {
  json doc;
  try {
    doc = json::parse(detail::read_file(path));
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  if (!doc.is_object()) throw FormatError(path.string() + ": config must be a JSON object");
  const fs::path base = path.parent_path();
  ExperimentConfig cfg;
  try {
    for (const auto& [key, value] : doc.items()) {
      if (key == "lm") {
        const auto s = value.get<std::string>();
        cfg.lm = is_url(s) ? s : resolve(base, s).string();
      } else if (key == "vocab") {
        cfg.vocab = resolve(base, value.get<std::string>());
      } else if (key == "constraint") {
        cfg.constraint = resolve(base, value.get<std::string>());
      } else if (key == "methods") {
        cfg.methods = value.get<std::vector<std::string>>();
      } else if (key == "seeds") {
        cfg.seeds = value.get<std::vector<std::uint64_t>>();
      } else if (key == "target_valid") {
        cfg.target_valid = value.get<std::size_t>();
      } else if (key == "cap") {
        cfg.sample_cap = value.get<std::size_t>();
      } else if (key == "horizon") {
        cfg.horizon = value.get<std::size_t>();
      } else if (key == "out") {
        cfg.out = resolve(base, value.get<std::string>());
      } else if (key == "oracle") {
        cfg.oracle = value.get<bool>();
      } else if (key == "dump_trie") {
        cfg.dump_trie = value.get<bool>();
      } else if (key == "timeout") {
        cfg.timeout_seconds = value.get<double>();
      } else {
        throw FormatError(path.string() + ": unknown config key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return cfg;
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.lm.empty()) throw PreconditionError("no language model given (--lm or \"lm\")");
  if (is_url(cfg.lm)) {
    if (cfg.vocab.empty()) throw PreconditionError("a remote LM needs a vocabulary file (--vocab or \"vocab\")");
    if (cfg.horizon == 0) throw PreconditionError("a remote LM needs an explicit horizon (--horizon or \"horizon\")");
  } else if (!fs::exists(cfg.lm)) {
    throw PreconditionError("LM file '" + cfg.lm + "' does not exist");
  }
  if (!cfg.constraint.empty() && !fs::exists(cfg.constraint)) {
    throw PreconditionError("constraint file '" + cfg.constraint.string() + "' does not exist");
  }
  if (cfg.methods.empty()) throw PreconditionError("methods list is empty");
  for (const auto& m : cfg.methods) {
    if (!kMethods.count(m)) {
      throw PreconditionError("unknown method '" + m + "' (expected a subset of rs, ars, rsft, cars, gcd)");
    }
  }
  if (cfg.seeds.empty()) throw PreconditionError("seeds list is empty");
  if (cfg.sample_cap == 0) throw PreconditionError("cap must be at least 1");
  if (cfg.target_valid > cfg.sample_cap) {
    throw PreconditionError("target_valid (" + std::to_string(cfg.target_valid) + ") exceeds cap (" +
                            std::to_string(cfg.sample_cap) + ")");
  }
}

std::unique_ptr<ConstraintChecker> load_constraint_file(const fs::path& path, const Vocabulary& vocab) {
  const auto ext = path.extension().string();
  const auto text = detail::read_file(path);
  try {
    if (ext == ".g") return earley_checker(parse_grammar(text).grammar, vocab);
    if (ext == ".dfa") return dfa_checker(parse_dfa(text), vocab);
  } catch (const ParseError& e) {
    throw FormatError(path.string() + ":" + e.what());
  }
  throw PreconditionError("constraint '" + path.string() + "': unknown extension (expected .g or .dfa)");
}

Instance load_instance(const ExperimentConfig& cfg) {
  Instance inst;
  if (is_url(cfg.lm)) {
    inst.lm = std::make_unique<RemoteLm>(load_vocabulary_file(cfg.vocab), cfg.horizon, cfg.lm, cfg.timeout_seconds);
  } else {
    inst.lm = load_lm_file(cfg.lm, cfg.horizon);
  }
  inst.checker = cfg.constraint.empty() ? trivial_checker(inst.lm->vocabulary())
                                        : load_constraint_file(cfg.constraint, inst.lm->vocabulary());
  return inst;
}

namespace {

std::string cell_name(const std::string& method, std::uint64_t seed) {
  return method + "_seed" + std::to_string(seed);
}

void write_samples(const fs::path& file, const RunResult& r, const Vocabulary& vocab) {
  std::ofstream out(file, std::ios::binary);
  out << "generation\taccepted\tlm_calls\tsequence\n";
  for (std::size_t i = 0; i < r.generations.size(); ++i) {
    const auto& g = r.generations[i];
    out << (i + 1) << '\t' << (g.accepted ? 1 : 0) << '\t' << g.lm_calls << '\t'
        << (g.tokens.size() == 0 ? std::string("-") : vocab.display(g.tokens.ids())) << '\n';
  }
}

std::ofstream open_out(const fs::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw FormatError("cannot write '" + file.string() + "'");
  return out;
}

}  // namespace

ExperimentSummary run_experiment(const ExperimentConfig& cfg, std::ostream& log) {
  validate(cfg);
  const Instance inst = load_instance(cfg);
  const LanguageModel& lm = *inst.lm;
  const ConstraintChecker& checker = *inst.checker;
  fs::create_directories(cfg.out);

  std::optional<ExactDistribution> target;
  if (cfg.oracle) {
    try {
      target = condition(enumerate_lm(lm), checker);
    } catch (const EmptyLanguageError&) {
      log << "oracle: L-mass = 0, oracle metrics left empty\n";
    }
  }

  struct Cell {
    std::string method;
    std::uint64_t seed;
    RunMetrics metrics;
  };
  std::vector<Cell> cells;
  ExperimentSummary summary;

  for (const auto& method : cfg.methods) {
    for (const auto seed : cfg.seeds) {
      SamplerConfig sc;
      sc.seed = seed;
      sc.max_len = lm.horizon();
      sc.sample_cap = cfg.sample_cap;
      sc.target_valid = cfg.target_valid;
      const std::string name = cell_name(method, seed);

      RunResult r;
      if (method == "gcd") {
        r = run_gcd(lm, checker, sc);
      } else {
        sc.strategy = *parse_strategy(method);
        IterationObserver observer;
        if (cfg.dump_trie) {
          observer = [&](std::size_t iteration, const InvalidPrefixTrie& trie) {
            if (iteration % 100 != 0) return;
            auto out = open_out(cfg.out / ("trie_" + name + "_" + std::to_string(iteration) + ".txt"));
            out << trie.snapshot();
          };
        }
        r = run(lm, checker, sc, nullptr, observer);
      }

      auto& m = r.metrics;
      if (!r.accepted.empty()) {
        m.kl_proxy = empirical_kl_vs_lm(r.accepted, lm);
        if (target) {
          m.kl_oracle = empirical_kl(r.accepted, *target);
          m.tv_oracle = total_variation(r.accepted, *target);
        }
      }
      {
        auto out = open_out(cfg.out / ("trajectory_" + name + ".csv"));
        write_trajectory_csv(out, m);
      }
      write_samples(cfg.out / ("samples_" + name + ".tsv"), r, lm.vocabulary());

      const bool timeout = cfg.target_valid > 0 && m.accepted < cfg.target_valid;
      if (timeout) ++summary.timeouts;
      log << name << ": " << m.accepted << " accepted in " << m.generations << " generations, " << m.lm_calls
          << " LM calls" << (timeout ? " (timeout)" : "") << (r.exhausted ? " (L-mass exhausted)" : "")
          << '\n';
      cells.push_back({method, seed, std::move(m)});
    }
  }

  // Per-method bootstrap CI of the KL across seeds (oracle KL when available).
  std::map<std::string, std::vector<double>> kl_by_method;
  for (const auto& c : cells) {
    const auto& kl = c.metrics.kl_oracle ? c.metrics.kl_oracle : c.metrics.kl_proxy;
    if (kl) kl_by_method[c.method].push_back(*kl);
  }
  for (auto& c : cells) {
    const auto& values = kl_by_method[c.method];
    if (values.size() >= 2) c.metrics.bootstrap_ci = bootstrap_ci(values);
  }

  auto out = open_out(cfg.out / "metrics.csv");
  write_metrics_header(out);
  for (const auto& c : cells) {
    write_metrics_row(out, c.method, c.seed, c.metrics);
    ++summary.rows;
  }
  return summary;
}

std::string oracle_report(const ExperimentConfig& cfg) {
  if (cfg.lm.empty()) throw PreconditionError("no language model given (--lm or \"lm\")");
  const Instance inst = load_instance(cfg);
  const auto& vocab = inst.lm->vocabulary();
  const ExactDistribution p = enumerate_lm(*inst.lm);

  std::vector<std::pair<Sequence, double>> members;
  double mass = 0.0;
  for (const auto& [w, q] : p.table) {
    if (inst.checker->is_complete(w)) {
      members.emplace_back(w, q);
      mass += q;
    }
  }

  std::string out;
  char buf[128];
  std::snprintf(buf, sizeof buf, "support: %zu sequences\n", p.table.size());
  out += buf;
  std::snprintf(buf, sizeof buf, "|L ∩ support|: %zu\n", members.size());
  out += buf;
  if (members.empty() || !(mass > 0.0)) {
    out += "L-mass = 0: no sequence in the LM's support satisfies the constraint\n";
    return out;
  }
  std::snprintf(buf, sizeof buf, "L-mass: %.17g\n", mass);
  out += buf;

  std::stable_sort(members.begin(), members.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  out += "top P^L:\n";
  for (std::size_t i = 0; i < std::min<std::size_t>(10, members.size()); ++i) {
    std::snprintf(buf, sizeof buf, "\t%.17g\n", members[i].second / mass);
    out += "  " + vocab.display(members[i].first.ids()) + buf;
  }
  return out;
}

}  // namespace cars
