#pragma once

#include <algorithm>
#include <cstdint>
#include <queue>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace stagecause {

using Edge = std::pair<std::size_t, std::size_t>;

// Directed acyclic graph over vertices 0..p-1.
class Dag {
 public:
  explicit Dag(std::size_t p = 0) : p_(p), parents_(p), children_(p) {}

  Dag(std::size_t p, const std::vector<Edge>& edges) : Dag(p) {
    for (auto [a, b] : edges) add_edge(a, b);
    if (!acyclic()) throw std::invalid_argument("graph has a directed cycle");
  }

  std::size_t size() const { return p_; }

  bool has_edge(std::size_t a, std::size_t b) const {
    return std::binary_search(children_.at(a).begin(), children_.at(a).end(), b);
  }
  bool adjacent(std::size_t a, std::size_t b) const { return has_edge(a, b) || has_edge(b, a); }

  const std::vector<std::size_t>& parents(std::size_t v) const { return parents_.at(v); }
  const std::vector<std::size_t>& children(std::size_t v) const { return children_.at(v); }

  std::vector<Edge> edges() const {
    std::vector<Edge> out;
    for (std::size_t a = 0; a < p_; ++a)
      for (auto b : children_[a]) out.emplace_back(a, b);
    return out;
  }
  std::size_t num_edges() const {
    std::size_t n = 0;
    for (const auto& c : children_) n += c.size();
    return n;
  }

  // Kahn's algorithm, smallest available vertex first. Empty if cyclic.
  std::vector<std::size_t> topological_order() const {
    std::vector<std::size_t> indeg(p_);
    for (std::size_t v = 0; v < p_; ++v) indeg[v] = parents_[v].size();
    std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
    for (std::size_t v = 0; v < p_; ++v)
      if (indeg[v] == 0) ready.push(v);
    std::vector<std::size_t> order;
    while (!ready.empty()) {
      auto v = ready.top();
      ready.pop();
      order.push_back(v);
      for (auto c : children_[v])
        if (--indeg[c] == 0) ready.push(c);
    }
    if (order.size() != p_) order.clear();
    return order;
  }

  bool acyclic() const { return p_ == 0 || !topological_order().empty(); }

  bool is_topological(const std::vector<std::size_t>& order) const {
    if (order.size() != p_) return false;
    std::vector<std::size_t> pos(p_, p_);
    for (std::size_t i = 0; i < order.size(); ++i) {
      if (order[i] >= p_ || pos[order[i]] != p_) return false;
      pos[order[i]] = i;
    }
    for (auto [a, b] : edges())
      if (pos[a] > pos[b]) return false;
    return true;
  }

  // Vertices reachable from v by a directed path of length >= 1.
  std::vector<bool> descendants(std::size_t v) const { return reach(v, children_); }
  std::vector<bool> ancestors(std::size_t v) const { return reach(v, parents_); }

  bool operator==(const Dag& o) const { return p_ == o.p_ && children_ == o.children_; }

 private:
  void add_edge(std::size_t a, std::size_t b) {
    if (a >= p_ || b >= p_) throw std::out_of_range("edge endpoint out of range");
    if (a == b) throw std::invalid_argument("self loop");
    auto& ch = children_[a];
    auto it = std::lower_bound(ch.begin(), ch.end(), b);
    if (it != ch.end() && *it == b) return;
    ch.insert(it, b);
    auto& pa = parents_[b];
    pa.insert(std::lower_bound(pa.begin(), pa.end(), a), a);
  }

  std::vector<bool> reach(std::size_t v, const std::vector<std::vector<std::size_t>>& next) const {
    std::vector<bool> seen(p_, false);
    std::vector<std::size_t> stack(next.at(v).begin(), next.at(v).end());
    while (!stack.empty()) {
      auto u = stack.back();
      stack.pop_back();
      if (seen[u]) continue;
      seen[u] = true;
      for (auto w : next[u]) stack.push_back(w);
    }
    return seen;
  }

  std::size_t p_;
  std::vector<std::vector<std::size_t>> parents_;
  std::vector<std::vector<std::size_t>> children_;
};

// Partially directed graph. Undirected edges are stored as (min, max).
struct Pdag {
  std::size_t p = 0;
  std::set<Edge> directed;
  std::set<Edge> undirected;

  void add_directed(std::size_t a, std::size_t b) {
    if (undirected.count(std::minmax(a, b)) || directed.count({b, a}))
      throw std::invalid_argument("pair already connected");
    directed.emplace(a, b);
  }
  void add_undirected(std::size_t a, std::size_t b) {
    if (directed.count({a, b}) || directed.count({b, a}))
      throw std::invalid_argument("pair already connected");
    undirected.insert(std::minmax(a, b));
  }

  bool operator==(const Pdag&) const = default;
};

}  // namespace stagecause
