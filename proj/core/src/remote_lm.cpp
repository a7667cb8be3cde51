#include "cars/remote_lm.hpp"

#include <algorithm>
#include <cmath>
#include <httplib.h>
#include <limits>
#include <nlohmann/json.hpp>

#include "cars/errors.hpp"

namespace cars {

NextTokenDistribution distribution_from_logprobs(std::span<const double> logprobs,
                                                 std::size_t expected_size) {
  if (logprobs.size() != expected_size) {
    throw TransportError("logprobs has " + std::to_string(logprobs.size()) +
                         " entries, vocabulary has " + std::to_string(expected_size));
  }
  double max_lp = -std::numeric_limits<double>::infinity();
  for (double lp : logprobs) {
    if (std::isnan(lp) || lp == std::numeric_limits<double>::infinity()) {
      throw TransportError("logprobs contains a non-finite value");
    }
    max_lp = std::max(max_lp, lp);
  }
  if (!std::isfinite(max_lp)) throw TransportError("logprobs assigns no mass to any token");
  // Max-shifted softmax.
  std::vector<double> probs(logprobs.size());
  std::transform(logprobs.begin(), logprobs.end(), probs.begin(),
                 [max_lp](double lp) { return std::exp(lp - max_lp); });
  return NextTokenDistribution(std::move(probs));
}

RemoteLm::RemoteLm(Vocabulary vocab, std::size_t horizon, std::string endpoint,
                   double timeout_seconds)
    : LanguageModel(std::move(vocab), horizon),
      endpoint_(std::move(endpoint)),
      timeout_seconds_(timeout_seconds) {
  const auto scheme_end = endpoint_.find("://");
  if (scheme_end == std::string::npos) {
    throw FormatError("endpoint '" + endpoint_ + "' is not an absolute URL");
  }
  const auto path_start = endpoint_.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    host_ = endpoint_;
    path_ = "/";
  } else {
    host_ = endpoint_.substr(0, path_start);
    path_ = endpoint_.substr(path_start);
  }
}

NextTokenDistribution RemoteLm::conditional(std::span<const TokenId> prefix) const {
  TokenString key(prefix.begin(), prefix.end());
  {
    std::lock_guard lock(mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  }
  // Fetched outside the lock; the first insertion wins.
  NextTokenDistribution dist = fetch(prefix);
  std::lock_guard lock(mutex_);
  return cache_.emplace(std::move(key), std::move(dist)).first->second;
}

NextTokenDistribution RemoteLm::fetch(std::span<const TokenId> prefix) const {
  httplib::Client client(host_);
  const auto secs = static_cast<time_t>(timeout_seconds_);
  const auto usecs = static_cast<time_t>((timeout_seconds_ - static_cast<double>(secs)) * 1e6);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);

  nlohmann::json body;
  body["prefix"] = TokenString(prefix.begin(), prefix.end());
  ++requests_;
  auto res = client.Post(path_, body.dump(), "application/json");
  if (!res) {
    throw TransportError("request to " + endpoint_ + " failed: " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw TransportError("request to " + endpoint_ + " returned HTTP " + std::to_string(res->status));
  }
  std::vector<double> logprobs;
  try {
    const auto doc = nlohmann::json::parse(res->body);
    for (const auto& v : doc.at("logprobs")) {
      // JSON has no infinities; null stands for -inf (a masked token).
      logprobs.push_back(v.is_null() ? -std::numeric_limits<double>::infinity() : v.get<double>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw TransportError(std::string("malformed response: ") + e.what());
  }
  return distribution_from_logprobs(logprobs, vocabulary().size());
}

}  // namespace cars
