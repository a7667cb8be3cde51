#include "cars/dfa.hpp"

#include <sstream>
#include <string>

#include "cars/errors.hpp"

namespace cars {

std::vector<bool> DfaConstraint::co_reachable() const {
  std::vector<bool> live(accepting);
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t s = 0; s < state_count; ++s) {
      if (live[s]) continue;
      for (std::size_t b = 0; b < 256; ++b) {
        const auto t = transitions[s * 256 + b];
        if (t != kDead && live[static_cast<std::size_t>(t)]) {
          live[s] = changed = true;
          break;
        }
      }
    }
  }
  return live;
}

namespace {

std::string parse_label(std::istringstream& in, std::size_t line_no) {
  std::string rest;
  std::getline(in, rest);
  const auto open = rest.find('"');
  const auto close = rest.rfind('"');
  if (open == std::string::npos || close == open) {
    throw ParseError("expected a quoted byte label", line_no, 1);
  }
  std::string raw = rest.substr(open + 1, close - open - 1);
  std::string out;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] == '\\' && i + 1 < raw.size()) {
      const char e = raw[++i];
      if (e == 'n') out += '\n';
      else if (e == 't') out += '\t';
      else out += e;
    } else {
      out += raw[i];
    }
  }
  return out;
}

}  // namespace

DfaConstraint parse_dfa(std::string_view source) {
  DfaConstraint d;
  std::istringstream lines{std::string(source)};
  std::string line;
  std::size_t line_no = 0;
  bool explicit_alphabet = false;
  std::vector<bool> edge_bytes(256, false);
  std::vector<std::size_t> accept_list;
  struct Edge {
    std::int64_t from, to;
    std::string label;
    std::size_t line;
  };
  std::vector<Edge> edges;
  std::int64_t start = 0;

  while (std::getline(lines, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos && line.find('"') > hash) line.resize(hash);
    std::istringstream in(line);
    std::string word;
    if (!(in >> word)) continue;
    if (word == "states") {
      long long n = 0;
      if (!(in >> n) || n <= 0) throw ParseError("states needs a positive count", line_no, 1);
      d.state_count = static_cast<std::size_t>(n);
    } else if (word == "start") {
      if (!(in >> start)) throw ParseError("start needs a state", line_no, 1);
    } else if (word == "accept") {
      long long s;
      while (in >> s) {
        if (s < 0) throw ParseError("negative state", line_no, 1);
        accept_list.push_back(static_cast<std::size_t>(s));
      }
    } else if (word == "alphabet") {
      explicit_alphabet = true;
      d.alphabet.assign(256, false);
      for (unsigned char c : parse_label(in, line_no)) d.alphabet[c] = true;
    } else if (word == "edge") {
      Edge e{0, 0, {}, line_no};
      if (!(in >> e.from >> e.to)) throw ParseError("edge needs 'from to \"label\"'", line_no, 1);
      e.label = parse_label(in, line_no);
      for (unsigned char c : e.label) edge_bytes[c] = true;
      edges.push_back(std::move(e));
    } else {
      throw ParseError("unknown directive '" + word + "'", line_no, 1);
    }
  }
  if (d.state_count == 0) throw FormatError("dfa: missing 'states'");
  auto in_range = [&](std::int64_t s) { return s >= 0 && static_cast<std::size_t>(s) < d.state_count; };
  if (!in_range(start)) throw FormatError("dfa: start state out of range");
  d.start = static_cast<std::int32_t>(start);
  d.accepting.assign(d.state_count, false);
  for (auto s : accept_list) {
    if (s >= d.state_count) throw FormatError("dfa: accepting state out of range");
    d.accepting[s] = true;
  }
  if (!explicit_alphabet) d.alphabet = edge_bytes;
  d.transitions.assign(d.state_count * 256, DfaConstraint::kDead);
  for (const auto& e : edges) {
    if (!in_range(e.from) || !in_range(e.to)) throw ParseError("edge state out of range", e.line, 1);
    for (unsigned char c : e.label) {
      if (!d.alphabet[c]) throw ParseError("edge byte outside the alphabet", e.line, 1);
      auto& slot = d.transitions[static_cast<std::size_t>(e.from) * 256 + c];
      if (slot != DfaConstraint::kDead && slot != e.to) {
        throw ParseError("nondeterministic edge", e.line, 1);
      }
      slot = static_cast<std::int32_t>(e.to);
    }
  }
  return d;
}

DfaRecognizer::DfaRecognizer(DfaConstraint dfa) : dfa_(std::move(dfa)) {
  if (dfa_.transitions.size() != dfa_.state_count * 256 || dfa_.accepting.size() != dfa_.state_count ||
      dfa_.alphabet.size() != 256) {
    throw FormatError("dfa tables have inconsistent sizes");
  }
  live_ = dfa_.co_reachable();
  if (!live_[static_cast<std::size_t>(dfa_.start)]) {
    throw EmptyLanguageError("dfa accepts nothing: no accepting state reachable from start");
  }
}

ByteRecognizer::State DfaRecognizer::start() const { return static_cast<State>(dfa_.start); }

std::optional<ByteRecognizer::State> DfaRecognizer::advance(State s, std::uint8_t byte) const {
  const auto t = dfa_.next(static_cast<std::int32_t>(s), byte);
  if (t == DfaConstraint::kDead || !live_[static_cast<std::size_t>(t)]) return std::nullopt;
  return static_cast<State>(t);
}

bool DfaRecognizer::accepting(State s) const { return dfa_.accepting[s]; }

std::unique_ptr<RecognizerChecker> dfa_checker(DfaConstraint dfa, const Vocabulary& vocab) {
  return std::make_unique<RecognizerChecker>(std::make_shared<DfaRecognizer>(std::move(dfa)), vocab);
}

}  // namespace cars
