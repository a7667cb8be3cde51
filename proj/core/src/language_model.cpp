#include "cars/language_model.hpp"

#include <cmath>
#include <nlohmann/json.hpp>
#include <numeric>

#include "cars/errors.hpp"
#include "io_util.hpp"

namespace cars {

namespace {

constexpr TokenId kStartMarker = -1;

double checked_sum(std::span<const double> probs) {
  double sum = 0.0;
  for (double p : probs) {
    if (!std::isfinite(p)) throw FormatError("probability is not finite");
    if (p < 0.0) throw FormatError("negative probability " + std::to_string(p));
    sum += p;
  }
  return sum;
}

}  // namespace

NextTokenDistribution::NextTokenDistribution(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.empty()) throw FormatError("empty next-token distribution");
  const double sum = checked_sum(probs_);
  if (!(sum > 0.0)) throw FormatError("next-token distribution has zero total mass");
  if (sum != 1.0) {
    for (double& p : probs_) p /= sum;
  }
}

NextTokenDistribution NextTokenDistribution::point_mass(std::size_t size, TokenId token) {
  std::vector<double> probs(size, 0.0);
  probs.at(static_cast<std::size_t>(token)) = 1.0;
  return NextTokenDistribution(std::move(probs));
}

LanguageModel::LanguageModel(Vocabulary vocab, std::size_t horizon)
    : vocab_(std::move(vocab)), horizon_(horizon) {
  if (horizon_ == 0) throw FormatError("horizon must be positive");
}

NextTokenDistribution LanguageModel::next_distribution(std::span<const TokenId> prefix) const {
  for (TokenId t : prefix) {
    if (!vocab_.contains(t)) throw PreconditionError("prefix holds unknown token id");
    if (vocab_.is_eos(t)) throw PreconditionError("next_distribution called on a terminated prefix");
  }
  if (prefix.size() > horizon_) throw PreconditionError("prefix longer than the horizon");
  if (prefix.size() == horizon_) return NextTokenDistribution::point_mass(vocab_.size(), vocab_.eos());
  auto dist = conditional(prefix);
  if (dist.size() != vocab_.size()) {
    throw ConsistencyError("distribution dimension " + std::to_string(dist.size()) +
                           " != vocabulary size " + std::to_string(vocab_.size()));
  }
  return dist;
}

double sequence_probability(const Sequence& w, const LanguageModel& lm) {
  if (!w.terminated()) throw PreconditionError("sequence_probability needs a terminated sequence");
  const auto ids = w.ids();
  double log_p = 0.0;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const double p = lm.next_distribution(ids.first(i))[ids[i]];
    if (p == 0.0) return 0.0;
    log_p += std::log(p);
  }
  return std::exp(log_p);
}

TableLm::TableLm(Vocabulary vocab, std::size_t horizon, NextTokenDistribution fallback,
                 std::unordered_map<TokenString, NextTokenDistribution, TokenStringHash> table)
    : LanguageModel(std::move(vocab), horizon),
      fallback_(std::move(fallback)),
      table_(std::move(table)) {
  const std::size_t n = vocabulary().size();
  if (fallback_.size() != n) throw FormatError("default vector has wrong dimension");
  for (const auto& [ctx, dist] : table_) {
    if (dist.size() != n) throw FormatError("context vector has wrong dimension");
    for (TokenId t : ctx) {
      if (!vocabulary().contains(t) || vocabulary().is_eos(t)) {
        throw FormatError("context contains eos or an unknown token id");
      }
    }
  }
}

NextTokenDistribution TableLm::conditional(std::span<const TokenId> prefix) const {
  auto it = table_.find(TokenString(prefix.begin(), prefix.end()));
  return it == table_.end() ? fallback_ : it->second;
}

NgramLm::NgramLm(Vocabulary vocab, std::size_t horizon, std::size_t order,
                 const std::vector<std::string>& corpus)
    : LanguageModel(std::move(vocab), horizon), order_(order) {
  if (order_ == 0) throw FormatError("n-gram order must be positive");
  const std::size_t n = vocabulary().size();
  for (const auto& sentence : corpus) {
    TokenString toks = vocabulary().tokenize(sentence);
    toks.push_back(vocabulary().eos());
    for (std::size_t i = 0; i < toks.size(); ++i) {
      auto& row = counts_[context_of(std::span<const TokenId>(toks).first(i))];
      if (row.empty()) row.assign(n, 0);
      ++row[static_cast<std::size_t>(toks[i])];
    }
  }
}

TokenString NgramLm::context_of(std::span<const TokenId> prefix) const {
  const std::size_t k = order_ - 1;
  TokenString ctx(k, kStartMarker);
  const std::size_t take = std::min(k, prefix.size());
  std::copy(prefix.end() - static_cast<std::ptrdiff_t>(take), prefix.end(),
            ctx.end() - static_cast<std::ptrdiff_t>(take));
  return ctx;
}

NextTokenDistribution NgramLm::conditional(std::span<const TokenId> prefix) const {
  const std::size_t n = vocabulary().size();
  std::vector<double> probs(n, 1.0);
  double denom = static_cast<double>(n);
  if (auto it = counts_.find(context_of(prefix)); it != counts_.end()) {
    for (std::size_t a = 0; a < n; ++a) {
      probs[a] += static_cast<double>(it->second[a]);
      denom += static_cast<double>(it->second[a]);
    }
  }
  for (double& p : probs) p /= denom;
  return NextTokenDistribution(std::move(probs));
}

namespace {

using nlohmann::json;

Vocabulary vocabulary_from_json(const json& doc) {
  if (!doc.contains("vocabulary") || !doc.contains("eos")) {
    throw FormatError("document needs \"vocabulary\" and \"eos\"");
  }
  return Vocabulary(doc.at("vocabulary").get<std::vector<std::string>>(),
                    doc.at("eos").get<TokenId>());
}

std::size_t horizon_from_json(const json& doc, std::size_t override_value) {
  if (override_value > 0) return override_value;
  if (!doc.contains("horizon")) throw FormatError("document needs \"horizon\"");
  const auto h = doc.at("horizon").get<long long>();
  if (h <= 0) throw FormatError("horizon must be positive");
  return static_cast<std::size_t>(h);
}

// Validates a probability vector from a document; renormalizes small drift.
NextTokenDistribution load_vector(const json& node, std::size_t n, const std::string& where,
                                  std::vector<std::string>& warnings) {
  auto probs = node.get<std::vector<double>>();
  if (probs.size() != n) {
    throw FormatError(where + ": expected " + std::to_string(n) + " entries, got " +
                      std::to_string(probs.size()));
  }
  double sum = 0.0;
  try {
    sum = checked_sum(probs);
  } catch (const FormatError& e) {
    throw FormatError(where + ": " + e.what());
  }
  const double drift = std::abs(sum - 1.0);
  if (drift > 1e-3) {
    throw FormatError(where + ": probabilities sum to " + std::to_string(sum));
  }
  if (drift > 1e-6) {
    warnings.push_back(where + ": renormalized vector summing to " + std::to_string(sum));
  }
  return NextTokenDistribution(std::move(probs));
}

json parse_json(std::string_view document) {
  try {
    return json::parse(document);
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed LM document: ") + e.what());
  }
}

}  // namespace

std::unique_ptr<TableLm> load_table_lm(std::string_view document, std::size_t horizon_override) {
  const json doc = parse_json(document);
  try {
    Vocabulary vocab = vocabulary_from_json(doc);
    const std::size_t horizon = horizon_from_json(doc, horizon_override);
    const std::size_t n = vocab.size();
    if (!doc.contains("default")) throw FormatError("table LM needs a \"default\" vector");
    std::vector<std::string> warnings;
    auto fallback = load_vector(doc.at("default"), n, "default", warnings);
    std::unordered_map<TokenString, NextTokenDistribution, TokenStringHash> table;
    if (doc.contains("contexts")) {
      for (const auto& entry : doc.at("contexts")) {
        auto ctx = entry.at("context").get<TokenString>();
        const std::string where = "context [" + vocab.render(ctx) + "]";
        auto dist = load_vector(entry.at("probs"), n, where, warnings);
        if (!table.emplace(std::move(ctx), std::move(dist)).second) {
          throw FormatError(where + ": duplicate context");
        }
      }
    }
    auto lm = std::make_unique<TableLm>(std::move(vocab), horizon, std::move(fallback), std::move(table));
    for (auto& w : warnings) lm->add_warning(std::move(w));
    return lm;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed table LM: ") + e.what());
  }
}

std::unique_ptr<NgramLm> load_ngram_lm(std::string_view document, std::size_t horizon_override) {
  const json doc = parse_json(document);
  try {
    Vocabulary vocab = vocabulary_from_json(doc);
    const std::size_t horizon = horizon_from_json(doc, horizon_override);
    const auto order = doc.at("order").get<std::size_t>();
    const auto corpus = doc.at("corpus").get<std::vector<std::string>>();
    return std::make_unique<NgramLm>(std::move(vocab), horizon, order, corpus);
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed n-gram LM: ") + e.what());
  }
}

std::unique_ptr<LanguageModel> load_lm_file(const std::filesystem::path& path,
                                            std::size_t horizon_override) {
  const std::string text = detail::read_file(path);
  const json doc = parse_json(text);
  const std::string type = doc.value("type", std::string("table"));
  if (type == "table") return load_table_lm(text, horizon_override);
  if (type == "ngram") return load_ngram_lm(text, horizon_override);
  throw FormatError("unknown LM type '" + type + "' in " + path.string());
}

Vocabulary load_vocabulary_file(const std::filesystem::path& path) {
  const json doc = parse_json(detail::read_file(path));
  try {
    return vocabulary_from_json(doc);
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed vocabulary: ") + e.what());
  }
}

}  // namespace cars
