#include "cars/earley.hpp"

#include <limits>

#include "cars/errors.hpp"

namespace cars {

EarleyRecognizer::EarleyRecognizer(Grammar g) : g_(std::move(g)) {
  if (g_.nonterminals.empty()) throw EmptyLanguageError("grammar has no nonterminals");
  const std::size_t aug_nt = g_.nonterminals.size();
  g_.nonterminals.push_back("<start>");
  augmented_ = g_.productions.size();
  g_.productions.push_back({aug_nt, {GrammarSymbol::nonterminal(g_.start)}});
  if (g_.productions.size() >= (1u << 20)) throw FormatError("grammar too large for the recognizer");

  by_lhs_.resize(g_.nonterminals.size());
  for (std::size_t i = 0; i < g_.productions.size(); ++i) {
    by_lhs_[g_.productions[i].lhs].push_back(static_cast<std::uint32_t>(i));
  }
  nullable_ = g_.nullable();

  columns_.emplace_back();
  add(columns_[0], {static_cast<std::uint32_t>(augmented_), 0, 0});
  close(0);
}

const GrammarSymbol* EarleyRecognizer::next_symbol(const Item& it) const {
  const auto& rhs = g_.productions[it.production].rhs;
  return it.dot < rhs.size() ? &rhs[it.dot] : nullptr;
}

void EarleyRecognizer::add(Column& col, Item it) const {
  if (col.seen.insert(key(it)).second) col.items.push_back(it);
}

void EarleyRecognizer::close(std::uint32_t col_id) const {
  Column& col = columns_[col_id];
  for (std::size_t i = 0; i < col.items.size(); ++i) {
    const Item item = col.items[i];
    const GrammarSymbol* sym = next_symbol(item);
    if (sym == nullptr) {
      const std::size_t lhs = g_.productions[item.production].lhs;
      if (item.production == augmented_ && item.origin == 0) col.accepting = true;
      const Column& origin = columns_[item.origin];
      // `origin` may be `col` itself (ε-completion).
      for (std::size_t j = 0; j < origin.items.size(); ++j) {
        const Item parent = origin.items[j];
        const GrammarSymbol* ps = next_symbol(parent);
        if (ps != nullptr && !ps->is_terminal() && ps->index == lhs) {
          add(col, {parent.production, parent.dot + 1, parent.origin});
        }
      }
    } else if (!sym->is_terminal()) {
      for (std::uint32_t p : by_lhs_[sym->index]) add(col, {p, 0, col_id});
      if (nullable_[sym->index]) add(col, {item.production, item.dot + 1, item.origin});
    }
  }
}

std::optional<ByteRecognizer::State> EarleyRecognizer::advance(State s, std::uint8_t byte) const {
  std::lock_guard lock(mutex_);
  Column& col = columns_.at(s);
  if (auto it = col.next.find(byte); it != col.next.end()) {
    if (it->second < 0) return std::nullopt;
    return static_cast<State>(it->second);
  }
  Column fresh;
  for (const Item& item : col.items) {
    const GrammarSymbol* sym = next_symbol(item);
    if (sym != nullptr && sym->is_terminal() && g_.terminals[sym->index].test(byte)) {
      add(fresh, {item.production, item.dot + 1, item.origin});
    }
  }
  if (fresh.items.empty()) {
    col.next.emplace(byte, -1);
    return std::nullopt;
  }
  if (columns_.size() >= std::numeric_limits<std::uint32_t>::max()) {
    throw ConsistencyError("Earley chart exhausted column ids");
  }
  const auto id = static_cast<std::uint32_t>(columns_.size());
  columns_.push_back(std::move(fresh));
  close(id);
  col.next.emplace(byte, id);
  return id;
}

bool EarleyRecognizer::accepting(State s) const {
  std::lock_guard lock(mutex_);
  return columns_.at(s).accepting;
}

std::vector<bool> EarleyRecognizer::alphabet() const {
  const ByteClass all = g_.alphabet();
  std::vector<bool> out(256);
  for (std::size_t b = 0; b < 256; ++b) out[b] = all.test(b);
  return out;
}

std::size_t EarleyRecognizer::column_count() const {
  std::lock_guard lock(mutex_);
  return columns_.size();
}

std::unique_ptr<RecognizerChecker> earley_checker(const Grammar& g, const Vocabulary& vocab,
                                                  EarleyOptions options) {
  auto reduced = reduce(g);
  auto recognizer = std::make_shared<EarleyRecognizer>(std::move(reduced.grammar));
  return std::make_unique<RecognizerChecker>(std::move(recognizer), vocab, options.allow_foreign_tokens);
}

}  // namespace cars
