#include "cars/vocab.hpp"

#include <algorithm>

#include "cars/errors.hpp"

namespace cars {

std::size_t TokenStringHash::operator()(std::span<const TokenId> ids) const noexcept {
  // FNV-1a over the id words.
  std::uint64_t h = 1469598103934665603ull;
  for (TokenId id : ids) {
    h ^= static_cast<std::uint32_t>(id);
    h *= 1099511628211ull;
  }
  h ^= ids.size();
  return static_cast<std::size_t>(h);
}

Vocabulary::Vocabulary(std::vector<std::string> surfaces, TokenId eos)
    : surfaces_(std::move(surfaces)), eos_(eos) {
  if (surfaces_.empty()) throw FormatError("vocabulary is empty");
  if (!contains(eos_)) throw FormatError("eos id " + std::to_string(eos_) + " out of range");
  for (std::size_t i = 0; i < surfaces_.size(); ++i) {
    const auto id = static_cast<TokenId>(i);
    if (id == eos_) continue;
    if (surfaces_[i].empty()) {
      throw FormatError("token " + std::to_string(i) + " has an empty surface");
    }
    if (!index_.emplace(surfaces_[i], id).second) {
      throw FormatError("duplicate token surface '" + surfaces_[i] + "'");
    }
    max_surface_len_ = std::max(max_surface_len_, surfaces_[i].size());
  }
}

const std::string& Vocabulary::surface(TokenId t) const {
  if (!contains(t)) throw PreconditionError("token id " + std::to_string(t) + " out of range");
  return surfaces_[static_cast<std::size_t>(t)];
}

std::optional<TokenId> Vocabulary::find(std::string_view s) const {
  auto it = index_.find(std::string(s));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

TokenString Vocabulary::tokenize(std::string_view text) const {
  TokenString out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t len = std::min(max_surface_len_, text.size() - pos);
    for (; len > 0; --len) {
      if (auto id = find(text.substr(pos, len))) {
        out.push_back(*id);
        break;
      }
    }
    if (len == 0) {
      throw FormatError("cannot tokenize '" + std::string(text) + "' at byte " +
                        std::to_string(pos));
    }
    pos += len;
  }
  return out;
}

std::string Vocabulary::render(std::span<const TokenId> ids) const {
  std::string out;
  for (TokenId t : ids) out += is_eos(t) ? std::string("$") : surface(t);
  return out;
}

std::string Vocabulary::display(std::span<const TokenId> ids) const {
  if (max_surface_len_ <= 1) return render(ids);
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out += '|';
    out += is_eos(ids[i]) ? std::string("$") : surface(ids[i]);
  }
  return out;
}

Sequence::Sequence(TokenString ids, TokenId eos) : ids_(std::move(ids)) {
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (ids_[i] == eos && i + 1 != ids_.size()) {
      throw PreconditionError("eos may only appear as the final token");
    }
  }
  terminated_ = !ids_.empty() && ids_.back() == eos;
}

bool is_prefix_of(std::span<const TokenId> prefix, std::span<const TokenId> whole) noexcept {
  return prefix.size() <= whole.size() && std::equal(prefix.begin(), prefix.end(), whole.begin());
}

}  // namespace cars
