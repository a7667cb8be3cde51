#include "cars/trie.hpp"

#include <cmath>
#include <cstdio>
#include <mutex>
#include <sstream>

#include "cars/errors.hpp"

namespace cars {

struct InvalidPrefixTrie::Node {
  std::map<TokenId, std::unique_ptr<Node>> children;
  double edge_prob = 1.0;  // P(this | parent); unused at the root
  double p = 1.0;
  bool leaf = false;

  const Node* child(TokenId a) const {
    auto it = children.find(a);
    return it == children.end() ? nullptr : it->second.get();
  }
};

namespace {

double clamp_probability(double p, const char* what) {
  if (p < 0.0) {
    if (p < -kClampTolerance) {
      throw ConsistencyError(std::string(what) + " fell below zero: " + std::to_string(p));
    }
    return 0.0;
  }
  if (p > 1.0) {
    if (p > 1.0 + kClampTolerance) {
      throw ConsistencyError(std::string(what) + " exceeds one: " + std::to_string(p));
    }
    return 1.0;
  }
  return p;
}

}  // namespace

InvalidPrefixTrie::InvalidPrefixTrie() : root_(std::make_unique<Node>()) {}
InvalidPrefixTrie::~InvalidPrefixTrie() = default;

InvalidPrefixTrie::InvalidPrefixTrie(InvalidPrefixTrie&& other) noexcept
    : root_(std::move(other.root_)), nodes_(other.nodes_), leaves_(other.leaves_) {
  other.root_ = std::make_unique<Node>();
  other.nodes_ = 1;
  other.leaves_ = 0;
}

InvalidPrefixTrie& InvalidPrefixTrie::operator=(InvalidPrefixTrie&& other) noexcept {
  if (this != &other) {
    std::scoped_lock lock(mutex_, other.mutex_);
    root_ = std::move(other.root_);
    nodes_ = other.nodes_;
    leaves_ = other.leaves_;
    other.root_ = std::make_unique<Node>();
    other.nodes_ = 1;
    other.leaves_ = 0;
  }
  return *this;
}

InsertResult InvalidPrefixTrie::insert_invalid(std::span<const TokenId> u, std::span<const double> edge_probs) {
  if (edge_probs.size() != u.size()) {
    throw PreconditionError("insert_invalid needs one edge probability per token");
  }
  for (double q : edge_probs) {
    if (!(q >= 0.0 && q <= 1.0)) throw PreconditionError("edge probability outside [0, 1]");
  }

  std::unique_lock lock(mutex_);
  std::vector<Node*> path{root_.get()};
  path.reserve(u.size() + 1);
  for (std::size_t i = 0; i < u.size(); ++i) {
    Node* node = path.back();
    if (node->leaf) return {0.0, InsertStatus::BelowLeaf};
    auto& slot = node->children[u[i]];
    if (!slot) {
      slot = std::make_unique<Node>();
      slot->edge_prob = edge_probs[i];
      ++nodes_;
    } else if (std::abs(slot->edge_prob - edge_probs[i]) > kEdgeProbTolerance) {
      throw ConsistencyError("edge probability changed for a cached trie edge: " +
                             std::to_string(slot->edge_prob) + " vs " + std::to_string(edge_probs[i]));
    }
    path.push_back(slot.get());
  }

  Node* target = path.back();
  if (target->leaf) return {0.0, InsertStatus::AlreadyCovered};

  // Prune whatever was tracked below u; W stays prefix-free.
  std::size_t pruned_nodes = 0;
  std::size_t pruned_leaves = 0;
  std::vector<const Node*> stack;
  for (const auto& [_, c] : target->children) stack.push_back(c.get());
  while (!stack.empty()) {
    const Node* n = stack.back();
    stack.pop_back();
    ++pruned_nodes;
    if (n->leaf) ++pruned_leaves;
    for (const auto& [_, c] : n->children) stack.push_back(c.get());
  }
  target->children.clear();
  nodes_ -= pruned_nodes;
  leaves_ = leaves_ - pruned_leaves + 1;

  double delta = target->p;
  target->p = 0.0;
  target->leaf = true;
  for (std::size_t i = path.size() - 1; i > 0; --i) {
    delta *= path[i]->edge_prob;
    path[i - 1]->p = clamp_probability(path[i - 1]->p - delta, "trie p value");
  }
  return {delta, InsertStatus::Inserted};
}

InsertResult InvalidPrefixTrie::insert_invalid(std::span<const TokenId> u, const LanguageModel& lm) {
  std::vector<double> edges(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) edges[i] = lm.next_distribution(u.first(i))[u[i]];
  return insert_invalid(u, edges);
}

double InvalidPrefixTrie::p_value_unlocked(std::span<const TokenId> u) const {
  const Node* node = root_.get();
  for (TokenId a : u) {
    if (node->leaf) return 0.0;
    node = node->child(a);
    if (node == nullptr) return 1.0;
  }
  return node->p;
}

double InvalidPrefixTrie::p_value(std::span<const TokenId> u) const {
  std::shared_lock lock(mutex_);
  return p_value_unlocked(u);
}

double InvalidPrefixTrie::p_root() const {
  std::shared_lock lock(mutex_);
  return root_->p;
}

std::size_t InvalidPrefixTrie::node_count() const {
  std::shared_lock lock(mutex_);
  return nodes_;
}

std::size_t InvalidPrefixTrie::leaf_count() const {
  std::shared_lock lock(mutex_);
  return leaves_;
}

InvalidPrefixTrie::Cursor InvalidPrefixTrie::cursor() const { return Cursor(root_.get()); }

double InvalidPrefixTrie::Cursor::p() const noexcept {
  if (dead_) return 0.0;
  return node_ == nullptr ? 1.0 : node_->p;
}

void InvalidPrefixTrie::Cursor::advance(TokenId a) {
  if (dead_ || node_ == nullptr) return;
  if (node_->leaf) {
    dead_ = true;
    return;
  }
  node_ = node_->child(a);
  if (node_ != nullptr && node_->leaf) {
    dead_ = true;
    node_ = nullptr;
  }
}

std::vector<double> InvalidPrefixTrie::Cursor::factors(const NextTokenDistribution& dist) const {
  const auto probs = dist.probs();
  if (dead_) throw PreconditionError("reweight_factors inside ext(W): p_u = 0");
  if (node_ == nullptr) return {probs.begin(), probs.end()};
  const double p_u = node_->p;
  if (!(p_u > 0.0)) throw PreconditionError("reweight_factors at a prefix with p_u = 0");
  std::vector<double> out(probs.begin(), probs.end());
  for (const auto& [a, child] : node_->children) {
    const auto idx = static_cast<std::size_t>(a);
    if (idx >= out.size()) throw ConsistencyError("trie edge outside the distribution");
    if (std::abs(child->edge_prob - probs[idx]) > kEdgeProbTolerance) {
      throw ConsistencyError("LM distribution disagrees with a cached trie edge");
    }
    out[idx] *= child->p;
  }
  double sum = 0.0;
  for (double& f : out) {
    f /= p_u;
    sum += f;
  }
  if (std::abs(sum - 1.0) > kReweightTolerance) {
    throw ConsistencyError("reweighted distribution sums to " + std::to_string(sum));
  }
  return out;
}

std::vector<double> InvalidPrefixTrie::reweight_factors(std::span<const TokenId> u,
                                                        const NextTokenDistribution& dist) const {
  std::shared_lock lock(mutex_);
  Cursor c = cursor();
  for (TokenId a : u) c.advance(a);
  return c.factors(dist);
}

void InvalidPrefixTrie::for_each_node(
    const std::function<void(std::span<const TokenId>, double, bool)>& fn) const {
  std::shared_lock lock(mutex_);
  TokenString prefix;
  std::function<void(const Node&)> visit = [&](const Node& n) {
    fn(prefix, n.p, n.leaf);
    for (const auto& [a, c] : n.children) {
      prefix.push_back(a);
      visit(*c);
      prefix.pop_back();
    }
  };
  visit(*root_);
}

std::string InvalidPrefixTrie::snapshot() const {
  std::string out;
  char buf[64];
  for_each_node([&](std::span<const TokenId> prefix, double p, bool leaf) {
    for (std::size_t i = 0; i < prefix.size(); ++i) {
      if (i) out += ',';
      out += std::to_string(prefix[i]);
    }
    std::snprintf(buf, sizeof buf, "\t%.17g\t%d\n", p, leaf ? 1 : 0);
    out += buf;
  });
  return out;
}

InvalidPrefixTrie InvalidPrefixTrie::from_snapshot(std::string_view text, const LanguageModel& lm) {
  InvalidPrefixTrie trie;
  std::istringstream lines{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab1 = line.find('\t');
    const auto tab2 = tab1 == std::string::npos ? tab1 : line.find('\t', tab1 + 1);
    if (tab2 == std::string::npos) {
      throw FormatError("trie snapshot line " + std::to_string(line_no) + ": expected three columns");
    }
    if (line.substr(tab2 + 1) != "1") continue;
    TokenString prefix;
    std::istringstream ids(line.substr(0, tab1));
    std::string id;
    while (std::getline(ids, id, ',')) {
      try {
        prefix.push_back(static_cast<TokenId>(std::stol(id)));
      } catch (const std::exception&) {
        throw FormatError("trie snapshot line " + std::to_string(line_no) + ": bad token id");
      }
    }
    trie.insert_invalid(prefix, lm);
  }
  return trie;
}

double InvalidPrefixTrie::max_local_inconsistency() const {
  std::shared_lock lock(mutex_);
  double worst = 0.0;
  std::function<void(const Node&)> visit = [&](const Node& n) {
    if (n.leaf) {
      worst = std::max(worst, std::abs(n.p));
      return;
    }
    double expected = 1.0;
    for (const auto& [_, c] : n.children) {
      expected -= c->edge_prob * (1.0 - c->p);
      visit(*c);
    }
    worst = std::max(worst, std::abs(n.p - expected));
  };
  visit(*root_);
  return worst;
}

}  // namespace cars
