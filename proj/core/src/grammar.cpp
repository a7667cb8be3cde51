#include "cars/grammar.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <sstream>

#include "cars/errors.hpp"

namespace cars {

std::size_t Grammar::add_terminal(const ByteClass& c) {
  for (std::size_t i = 0; i < terminals.size(); ++i) {
    if (terminals[i] == c) return i;
  }
  terminals.push_back(c);
  return terminals.size() - 1;
}

std::vector<bool> Grammar::nullable() const {
  std::vector<bool> result(nonterminals.size(), false);
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& p : productions) {
      if (result[p.lhs]) continue;
      const bool all = std::all_of(p.rhs.begin(), p.rhs.end(), [&](const GrammarSymbol& s) {
        return !s.is_terminal() && result[s.index];
      });
      if (all) result[p.lhs] = changed = true;
    }
  }
  return result;
}

std::vector<bool> Grammar::productive() const {
  std::vector<bool> result(nonterminals.size(), false);
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& p : productions) {
      if (result[p.lhs]) continue;
      const bool all = std::all_of(p.rhs.begin(), p.rhs.end(), [&](const GrammarSymbol& s) {
        return s.is_terminal() || result[s.index];
      });
      if (all) result[p.lhs] = changed = true;
    }
  }
  return result;
}

ByteClass Grammar::alphabet() const {
  ByteClass all;
  for (const auto& t : terminals) all |= t;
  return all;
}

ReducedGrammar reduce(const Grammar& g) {
  ReducedGrammar out;
  const auto productive = g.productive();
  if (g.nonterminals.empty() || !productive[g.start]) {
    throw EmptyLanguageError("grammar language is empty: start symbol derives no terminal string");
  }

  auto uses_only_productive = [&](const Production& p) {
    return std::all_of(p.rhs.begin(), p.rhs.end(),
                       [&](const GrammarSymbol& s) { return s.is_terminal() || productive[s.index]; });
  };

  std::vector<bool> reachable(g.nonterminals.size(), false);
  reachable[g.start] = true;
  std::vector<std::size_t> stack{g.start};
  while (!stack.empty()) {
    const std::size_t nt = stack.back();
    stack.pop_back();
    for (const auto& p : g.productions) {
      if (p.lhs != nt || !uses_only_productive(p)) continue;
      for (const auto& s : p.rhs) {
        if (!s.is_terminal() && !reachable[s.index]) {
          reachable[s.index] = true;
          stack.push_back(s.index);
        }
      }
    }
  }

  std::vector<std::size_t> remap(g.nonterminals.size(), SIZE_MAX);
  for (std::size_t i = 0; i < g.nonterminals.size(); ++i) {
    if (!productive[i]) {
      out.diagnostics.push_back("removed unproductive symbol '" + g.nonterminals[i] + "'");
    } else if (!reachable[i]) {
      out.diagnostics.push_back("removed unreachable symbol '" + g.nonterminals[i] + "'");
    } else {
      remap[i] = out.grammar.nonterminals.size();
      out.grammar.nonterminals.push_back(g.nonterminals[i]);
    }
  }
  out.grammar.start = remap[g.start];
  for (const auto& p : g.productions) {
    if (remap[p.lhs] == SIZE_MAX || !uses_only_productive(p)) continue;
    Production q{remap[p.lhs], {}};
    for (const auto& s : p.rhs) {
      q.rhs.push_back(s.is_terminal() ? GrammarSymbol::terminal(out.grammar.add_terminal(g.terminals[s.index]))
                                      : GrammarSymbol::nonterminal(remap[s.index]));
    }
    out.grammar.productions.push_back(std::move(q));
  }
  return out;
}

namespace {

struct Lexeme {
  enum class Kind { Name, String, Colon, Pipe, DotDot, LParen, RParen, Star, Plus, Question, Newline, End };
  Kind kind;
  std::string text;  // names: identifier; strings: decoded bytes
  std::size_t line;
  std::size_t column;
};

bool is_name_start(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
}

bool is_name_char(char c) { return is_name_start(c) || (c >= '0' && c <= '9') || c == '-'; }

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

std::vector<Lexeme> lex(std::string_view src) {
  std::vector<Lexeme> out;
  std::size_t line = 1;
  std::size_t col = 1;
  std::size_t i = 0;
  auto push = [&](Lexeme::Kind k, std::string text, std::size_t l, std::size_t c) {
    out.push_back({k, std::move(text), l, c});
  };
  while (i < src.size()) {
    const char c = src[i];
    if (c == '\n') {
      push(Lexeme::Kind::Newline, {}, line, col);
      ++line;
      col = 1;
      ++i;
      continue;
    }
    if (c == ' ' || c == '\t' || c == '\r') {
      ++i;
      ++col;
      continue;
    }
    if (c == '/' && i + 1 < src.size() && src[i + 1] == '/') {
      while (i < src.size() && src[i] != '\n') ++i;
      continue;
    }
    const std::size_t start_col = col;
    if (is_name_start(c)) {
      std::size_t j = i;
      while (j < src.size() && is_name_char(src[j])) ++j;
      push(Lexeme::Kind::Name, std::string(src.substr(i, j - i)), line, start_col);
      col += j - i;
      i = j;
      continue;
    }
    if (c == '"') {
      std::string bytes;
      std::size_t j = i + 1;
      std::size_t jcol = col + 1;
      bool closed = false;
      while (j < src.size() && src[j] != '\n') {
        if (src[j] == '"') {
          closed = true;
          break;
        }
        if (src[j] == '\\') {
          if (j + 1 >= src.size() || src[j + 1] == '\n') break;
          const char e = src[j + 1];
          switch (e) {
            case 'n': bytes += '\n'; break;
            case 't': bytes += '\t'; break;
            case 'r': bytes += '\r'; break;
            case '\\': bytes += '\\'; break;
            case '"': bytes += '"'; break;
            case 'x': {
              const int hi = j + 2 < src.size() ? hex_value(src[j + 2]) : -1;
              const int lo = j + 3 < src.size() ? hex_value(src[j + 3]) : -1;
              if (hi < 0 || lo < 0) throw ParseError("bad \\x escape", line, jcol);
              bytes += static_cast<char>(hi * 16 + lo);
              j += 2;
              jcol += 2;
              break;
            }
            default:
              throw ParseError(std::string("unknown escape \\") + e, line, jcol);
          }
          j += 2;
          jcol += 2;
          continue;
        }
        bytes += src[j];
        ++j;
        ++jcol;
      }
      if (!closed) throw ParseError("unterminated string literal", line, start_col);
      push(Lexeme::Kind::String, std::move(bytes), line, start_col);
      col = jcol + 1;
      i = j + 1;
      continue;
    }
    if (c == '.' && i + 1 < src.size() && src[i + 1] == '.') {
      push(Lexeme::Kind::DotDot, {}, line, start_col);
      i += 2;
      col += 2;
      continue;
    }
    Lexeme::Kind k;
    switch (c) {
      case ':': k = Lexeme::Kind::Colon; break;
      case '|': k = Lexeme::Kind::Pipe; break;
      case '(': k = Lexeme::Kind::LParen; break;
      case ')': k = Lexeme::Kind::RParen; break;
      case '*': k = Lexeme::Kind::Star; break;
      case '+': k = Lexeme::Kind::Plus; break;
      case '?': k = Lexeme::Kind::Question; break;
      default:
        throw ParseError(std::string("unexpected character '") + c + "'", line, start_col);
    }
    push(k, {}, line, start_col);
    ++i;
    ++col;
  }
  out.push_back({Lexeme::Kind::End, {}, line, col});
  return out;
}

class GrammarParser {
 public:
  explicit GrammarParser(std::vector<Lexeme> lexemes) : lx_(std::move(lexemes)) {}

  Grammar parse() {
    while (peek().kind != Lexeme::Kind::End) {
      if (peek().kind == Lexeme::Kind::Newline) {
        ++pos_;
        continue;
      }
      parse_rule();
    }
    if (g_.nonterminals.empty()) throw ParseError("grammar has no rules", peek().line, peek().column);
    for (std::size_t i = 0; i < g_.nonterminals.size(); ++i) {
      if (!defined_[i]) {
        const auto& at = first_use_.at(i);
        throw ParseError("undefined rule '" + g_.nonterminals[i] + "'", at.first, at.second);
      }
    }
    return std::move(g_);
  }

 private:
  using Symbols = std::vector<GrammarSymbol>;

  const Lexeme& peek(std::size_t ahead = 0) const {
    return lx_[std::min(pos_ + ahead, lx_.size() - 1)];
  }

  const Lexeme& expect(Lexeme::Kind k, const char* what) {
    if (peek().kind != k) throw ParseError(std::string("expected ") + what, peek().line, peek().column);
    return lx_[pos_++];
  }

  std::size_t nonterminal(const std::string& name, std::size_t line, std::size_t col) {
    auto it = names_.find(name);
    if (it != names_.end()) return it->second;
    const std::size_t idx = g_.nonterminals.size();
    g_.nonterminals.push_back(name);
    defined_.push_back(false);
    first_use_.emplace(idx, std::make_pair(line, col));
    names_.emplace(name, idx);
    return idx;
  }

  std::size_t fresh(const std::string& base) {
    std::string name;
    do {
      name = base + "~" + std::to_string(++fresh_counter_);
    } while (names_.count(name));
    const std::size_t idx = nonterminal(name, 0, 0);
    defined_[idx] = true;
    return idx;
  }

  void parse_rule() {
    const Lexeme& name = expect(Lexeme::Kind::Name, "rule name");
    const std::size_t lhs = nonterminal(name.text, name.line, name.column);
    defined_[lhs] = true;
    current_ = name.text;
    expect(Lexeme::Kind::Colon, "':' after rule name");
    for (auto& alt : parse_alternatives(false)) g_.productions.push_back({lhs, std::move(alt)});
    if (peek().kind != Lexeme::Kind::End) expect(Lexeme::Kind::Newline, "end of line");
  }

  // A newline followed by '|' continues the alternative list; inside
  // parentheses newlines are insignificant.
  void skip_newlines(bool nested) {
    if (nested) {
      while (peek().kind == Lexeme::Kind::Newline) ++pos_;
      return;
    }
    std::size_t k = 0;
    while (peek(k).kind == Lexeme::Kind::Newline) ++k;
    if (k > 0 && peek(k).kind == Lexeme::Kind::Pipe) pos_ += k;
  }

  std::vector<Symbols> parse_alternatives(bool nested) {
    std::vector<Symbols> alts;
    skip_newlines(nested);
    alts.push_back(parse_sequence(nested));
    skip_newlines(nested);
    while (peek().kind == Lexeme::Kind::Pipe) {
      ++pos_;
      skip_newlines(nested);
      alts.push_back(parse_sequence(nested));
      skip_newlines(nested);
    }
    return alts;
  }

  Symbols parse_sequence(bool nested) {
    Symbols seq;
    for (;;) {
      if (nested) skip_newlines(true);
      const auto k = peek().kind;
      if (k != Lexeme::Kind::Name && k != Lexeme::Kind::String && k != Lexeme::Kind::LParen) break;
      // "name :" starts the next rule only at line start, which the caller
      // handles; inside a sequence a name is always a reference.
      Symbols item = parse_atom();
      while (peek().kind == Lexeme::Kind::Star || peek().kind == Lexeme::Kind::Plus ||
             peek().kind == Lexeme::Kind::Question) {
        item = {GrammarSymbol::nonterminal(repeat(item, lx_[pos_++].kind))};
      }
      seq.insert(seq.end(), item.begin(), item.end());
    }
    return seq;
  }

  std::size_t repeat(const Symbols& body, Lexeme::Kind op) {
    const std::size_t nt = fresh(current_);
    const auto self = GrammarSymbol::nonterminal(nt);
    Symbols self_body{self};
    self_body.insert(self_body.end(), body.begin(), body.end());
    switch (op) {
      case Lexeme::Kind::Star:
        g_.productions.push_back({nt, {}});
        g_.productions.push_back({nt, self_body});
        break;
      case Lexeme::Kind::Plus:
        g_.productions.push_back({nt, body});
        g_.productions.push_back({nt, self_body});
        break;
      default:
        g_.productions.push_back({nt, {}});
        g_.productions.push_back({nt, body});
        break;
    }
    return nt;
  }

  Symbols parse_atom() {
    const Lexeme& lx = lx_[pos_++];
    switch (lx.kind) {
      case Lexeme::Kind::Name:
        return {GrammarSymbol::nonterminal(nonterminal(lx.text, lx.line, lx.column))};
      case Lexeme::Kind::String: {
        if (peek().kind == Lexeme::Kind::DotDot) {
          ++pos_;
          const Lexeme& hi = expect(Lexeme::Kind::String, "string after '..'");
          if (lx.text.size() != 1 || hi.text.size() != 1) {
            throw ParseError("range endpoints must be single bytes", lx.line, lx.column);
          }
          const auto a = static_cast<unsigned char>(lx.text[0]);
          const auto b = static_cast<unsigned char>(hi.text[0]);
          if (a > b) throw ParseError("empty byte range", lx.line, lx.column);
          ByteClass cls;
          for (unsigned v = a; v <= b; ++v) cls.set(v);
          return {GrammarSymbol::terminal(g_.add_terminal(cls))};
        }
        Symbols out;
        for (unsigned char c : lx.text) {
          ByteClass cls;
          cls.set(c);
          out.push_back(GrammarSymbol::terminal(g_.add_terminal(cls)));
        }
        return out;
      }
      case Lexeme::Kind::LParen: {
        auto alts = parse_alternatives(true);
        expect(Lexeme::Kind::RParen, "')'");
        if (alts.size() == 1) return alts.front();
        const std::size_t nt = fresh(current_);
        for (auto& alt : alts) g_.productions.push_back({nt, std::move(alt)});
        return {GrammarSymbol::nonterminal(nt)};
      }
      default:
        throw ParseError("expected a symbol", lx.line, lx.column);
    }
  }

  std::vector<Lexeme> lx_;
  std::size_t pos_ = 0;
  Grammar g_;
  std::map<std::string, std::size_t> names_;
  std::vector<bool> defined_;
  std::map<std::size_t, std::pair<std::size_t, std::size_t>> first_use_;
  std::string current_;
  std::size_t fresh_counter_ = 0;
};

std::string describe(const ByteClass& cls) {
  auto show = [](unsigned v) {
    if (v >= 0x20 && v < 0x7f && v != '"' && v != '\\') return std::string(1, static_cast<char>(v));
    const char* hex = "0123456789abcdef";
    return std::string("\\x") + hex[v >> 4] + hex[v & 15];
  };
  std::string out;
  unsigned v = 0;
  bool first = true;
  while (v < 256) {
    if (!cls.test(v)) {
      ++v;
      continue;
    }
    unsigned w = v;
    while (w + 1 < 256 && cls.test(w + 1)) ++w;
    if (!first) out += " | ";
    first = false;
    out += "\"" + show(v) + "\"";
    if (w > v) out += "..\"" + show(w) + "\"";
    v = w + 1;
  }
  return cls.count() > 1 && out.find('|') != std::string::npos ? "(" + out + ")" : out;
}

}  // namespace

ReducedGrammar parse_grammar(std::string_view source) {
  return reduce(GrammarParser(lex(source)).parse());
}

std::string to_string(const Grammar& g) {
  std::ostringstream out;
  for (const auto& p : g.productions) {
    out << g.nonterminals[p.lhs] << " :";
    if (p.rhs.empty()) out << " ε";
    for (const auto& s : p.rhs) {
      out << ' ' << (s.is_terminal() ? describe(g.terminals[s.index]) : g.nonterminals[s.index]);
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace cars
