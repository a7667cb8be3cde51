#pragma once

#include <atomic>
#include <cstddef>
#include <mutex>
#include <string>
#include <unordered_map>

#include "cars/language_model.hpp"

namespace cars {

/// LM served over HTTP. Each query POSTs {"prefix": [ids...]} to the
/// endpoint and expects {"logprobs": [...]} with exactly |Σ_$| entries.
///
/// Responses are exponentiated, renormalized and cached per prefix for the
/// lifetime of the object, so a run sees one fixed distribution per prefix.
class RemoteLm final : public LanguageModel {
 public:
  /// `endpoint` is a full URL, e.g. "http://127.0.0.1:8080/logprobs".
  RemoteLm(Vocabulary vocab, std::size_t horizon, std::string endpoint,
           double timeout_seconds = 30.0);

  const std::string& endpoint() const noexcept { return endpoint_; }

  /// Number of HTTP requests actually issued (cache misses).
  std::size_t network_requests() const noexcept { return requests_.load(); }

 protected:
  NextTokenDistribution conditional(std::span<const TokenId> prefix) const override;

 private:
  NextTokenDistribution fetch(std::span<const TokenId> prefix) const;

  std::string endpoint_;
  std::string host_;  // scheme://host[:port]
  std::string path_;
  double timeout_seconds_;

  mutable std::mutex mutex_;
  mutable std::unordered_map<TokenString, NextTokenDistribution, TokenStringHash> cache_;
  mutable std::atomic<std::size_t> requests_{0};
};

/// Converts a logprob vector into a distribution. Rejects non-finite values
/// other than -inf and vectors of the wrong dimension.
NextTokenDistribution distribution_from_logprobs(std::span<const double> logprobs,
                                                 std::size_t expected_size);

}  // namespace cars
