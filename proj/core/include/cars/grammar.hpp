#pragma once

#include <bitset>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace cars {

/// Set of bytes matched by one terminal position. A quoted string "ab"
/// contributes one class per byte; a range "a".."z" is a single class.
using ByteClass = std::bitset<256>;

struct GrammarSymbol {
  enum class Kind { Nonterminal, Terminal };
  Kind kind;
  std::size_t index;  // into Grammar::nonterminals or Grammar::terminals

  static GrammarSymbol nonterminal(std::size_t i) { return {Kind::Nonterminal, i}; }
  static GrammarSymbol terminal(std::size_t i) { return {Kind::Terminal, i}; }
  bool is_terminal() const noexcept { return kind == Kind::Terminal; }

  friend bool operator==(const GrammarSymbol&, const GrammarSymbol&) = default;
};

struct Production {
  std::size_t lhs;
  std::vector<GrammarSymbol> rhs;  // empty for an ε-production

  friend bool operator==(const Production&, const Production&) = default;
};

/// Context-free grammar over bytes.
struct Grammar {
  std::vector<std::string> nonterminals;
  std::vector<ByteClass> terminals;
  std::vector<Production> productions;
  std::size_t start = 0;

  std::size_t add_terminal(const ByteClass& c);  // deduplicating
  std::vector<bool> nullable() const;
  std::vector<bool> productive() const;
  /// Union of all terminal classes.
  ByteClass alphabet() const;
};

struct ReducedGrammar {
  Grammar grammar;
  /// One human-readable line per removed symbol.
  std::vector<std::string> diagnostics;
};

/// Drops unproductive nonterminals (and productions using them), then
/// unreachable ones. Throws EmptyLanguageError if the start symbol is
/// unproductive.
ReducedGrammar reduce(const Grammar& g);

/// Parses the rule-per-line grammar notation and reduces the result:
///
///   // comment
///   expr : term | term "+" expr
///   term : "0".."9"+ | "(" expr ")"
///
/// A line starting with '|' continues the previous rule. Elements are rule
/// names, "quoted" strings with \\ \" \n \t \xHH escapes, "a".."z" byte
/// ranges, and parenthesized groups, each optionally followed by *, + or ?.
/// The first rule defines the start symbol.
ReducedGrammar parse_grammar(std::string_view source);

/// Renders productions one per line (for diagnostics and golden tests).
std::string to_string(const Grammar& g);

}  // namespace cars
