#include "cars/constraint.hpp"

#include <algorithm>

#include "cars/errors.hpp"

namespace cars {

bool ViabilityMask::any() const noexcept {
  return std::any_of(bits_.begin(), bits_.end(), [](std::uint8_t b) { return b != 0; });
}

std::size_t ViabilityMask::count() const noexcept {
  return static_cast<std::size_t>(std::count_if(bits_.begin(), bits_.end(), [](std::uint8_t b) { return b != 0; }));
}

bool ConstraintChecker::is_complete(const Sequence& w) const {
  if (!w.terminated()) throw PreconditionError("is_complete needs a terminated sequence");
  return is_viable(w.ids());
}

RecognizerChecker::RecognizerChecker(std::shared_ptr<const ByteRecognizer> recognizer,
                                     Vocabulary vocab, bool allow_foreign_tokens)
    : ConstraintChecker(std::move(vocab)), recognizer_(std::move(recognizer)) {
  const auto alphabet = recognizer_->alphabet();
  const auto& v = vocabulary();
  foreign_.assign(v.size(), false);
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto id = static_cast<TokenId>(i);
    if (v.is_eos(id)) continue;
    for (unsigned char c : v.surface(id)) {
      if (!alphabet[c]) {
        if (!allow_foreign_tokens) {
          throw FormatError("token '" + v.surface(id) + "' contains byte " + std::to_string(c) +
                            " outside the constraint alphabet");
        }
        foreign_[i] = true;
        break;
      }
    }
  }
}

std::optional<ByteRecognizer::State> RecognizerChecker::step(ByteRecognizer::State s, TokenId t) const {
  if (foreign_[static_cast<std::size_t>(t)]) return std::nullopt;
  std::optional<ByteRecognizer::State> cur = s;
  for (unsigned char c : vocabulary().surface(t)) {
    cur = recognizer_->advance(*cur, c);
    if (!cur) break;
  }
  return cur;
}

std::optional<ByteRecognizer::State> RecognizerChecker::state_of(std::span<const TokenId> u) const {
  TokenString key(u.begin(), u.end());
  {
    std::lock_guard lock(mutex_);
    if (auto it = states_.find(key); it != states_.end()) return it->second;
  }
  std::optional<ByteRecognizer::State> s;
  if (u.empty()) {
    s = recognizer_->start();
  } else {
    s = state_of(u.first(u.size() - 1));
    if (s) s = step(*s, u.back());
  }
  std::lock_guard lock(mutex_);
  states_.emplace(std::move(key), s);
  return s;
}

bool RecognizerChecker::is_viable(std::span<const TokenId> u) const {
  const auto& v = vocabulary();
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (!v.contains(u[i])) throw PreconditionError("unknown token id");
    if (v.is_eos(u[i]) && i + 1 != u.size()) throw PreconditionError("eos before the end of a prefix");
  }
  if (!u.empty() && v.is_eos(u.back())) {
    const auto s = state_of(u.first(u.size() - 1));
    return s && recognizer_->accepting(*s);
  }
  return state_of(u).has_value();
}

ViabilityMask RecognizerChecker::viability_mask(std::span<const TokenId> u) const {
  const auto& v = vocabulary();
  if (!u.empty() && v.is_eos(u.back())) throw PreconditionError("viability_mask on a terminated prefix");
  TokenString key(u.begin(), u.end());
  {
    std::lock_guard lock(mutex_);
    if (auto it = masks_.find(key); it != masks_.end()) return it->second;
  }
  const auto s = state_of(u);
  if (!s) {
    throw PreconditionError("viability_mask queried on non-viable prefix '" + v.display(u) + "'");
  }
  std::vector<std::uint8_t> bits(v.size(), 0);
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto id = static_cast<TokenId>(i);
    bits[i] = v.is_eos(id) ? recognizer_->accepting(*s) : step(*s, id).has_value();
  }
  ViabilityMask mask(std::move(bits));
  std::lock_guard lock(mutex_);
  return masks_.emplace(std::move(key), std::move(mask)).first->second;
}

std::size_t RecognizerChecker::memoized_masks() const {
  std::lock_guard lock(mutex_);
  return masks_.size();
}

namespace {

class TrivialChecker final : public ConstraintChecker {
 public:
  using ConstraintChecker::ConstraintChecker;

  ViabilityMask viability_mask(std::span<const TokenId> u) const override {
    if (!u.empty() && vocabulary().is_eos(u.back())) {
      throw PreconditionError("viability_mask on a terminated prefix");
    }
    return ViabilityMask(std::vector<std::uint8_t>(vocabulary().size(), 1));
  }

  bool is_viable(std::span<const TokenId>) const override { return true; }
};

}  // namespace

std::unique_ptr<ConstraintChecker> trivial_checker(const Vocabulary& vocab) {
  return std::make_unique<TrivialChecker>(vocab);
}

}  // namespace cars
