#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gresit/common.hpp"

namespace gresit {

using Node = std::size_t;
using NodeSet = std::set<Node>;
using Edge = std::pair<Node, Node>;

/// Directed acyclic graph over group indices 0..p-1. Immutable once built;
/// the constructor rejects self-loops, out-of-range endpoints and cycles.
class GroupDag {
 public:
  GroupDag() = default;

  explicit GroupDag(std::size_t p, std::span<const Edge> edges = {})
      : p_(p), parents_(p), children_(p) {
    for (const auto& [from, to] : edges) {
      if (from >= p || to >= p) {
        throw IndexError("edge (" + std::to_string(from) + "," + std::to_string(to) +
                         ") out of range for p=" + std::to_string(p));
      }
      if (from == to) {
        throw ArgumentError("self-loop on node " + std::to_string(from));
      }
      if (edges_.insert({from, to}).second) {
        parents_[to].push_back(from);
        children_[from].push_back(to);
      }
    }
    for (auto& v : parents_) std::sort(v.begin(), v.end());
    for (auto& v : children_) std::sort(v.begin(), v.end());
    topo_ = compute_topological_order();
    if (topo_.size() != p_) {
      throw ArgumentError("graph contains a directed cycle");
    }
  }

  GroupDag(std::size_t p, const std::vector<Edge>& edges)
      : GroupDag(p, std::span<const Edge>(edges.data(), edges.size())) {}

  std::size_t p() const noexcept { return p_; }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  const std::set<Edge>& edges() const noexcept { return edges_; }

  bool has_edge(Node from, Node to) const { return edges_.count({from, to}) > 0; }

  const std::vector<Node>& parents(Node g) const {
    check(g);
    return parents_[g];
  }
  const std::vector<Node>& children(Node g) const {
    check(g);
    return children_[g];
  }

  /// One topological order (Kahn's algorithm, smallest index first).
  const std::vector<Node>& topological_order() const noexcept { return topo_; }

  void check(Node g) const {
    if (g >= p_) {
      throw IndexError("node " + std::to_string(g) + " out of range for p=" + std::to_string(p_));
    }
  }

  friend bool operator==(const GroupDag& a, const GroupDag& b) {
    return a.p_ == b.p_ && a.edges_ == b.edges_;
  }

 private:
  std::vector<Node> compute_topological_order() const {
    std::vector<std::size_t> indeg(p_, 0);
    for (const auto& e : edges_) ++indeg[e.second];
    std::set<Node> ready;
    for (Node g = 0; g < p_; ++g)
      if (indeg[g] == 0) ready.insert(g);
    std::vector<Node> order;
    order.reserve(p_);
    while (!ready.empty()) {
      const Node g = *ready.begin();
      ready.erase(ready.begin());
      order.push_back(g);
      for (Node c : children_[g])
        if (--indeg[c] == 0) ready.insert(c);
    }
    return order;
  }

  std::size_t p_ = 0;
  std::set<Edge> edges_;
  std::vector<std::vector<Node>> parents_;
  std::vector<std::vector<Node>> children_;
  std::vector<Node> topo_;
};

/// Causal order stored as the sequence of nodes from first (root side) to
/// last (sink side). position(g) gives the 0-based rank of node g.
class CausalOrder {
 public:
  CausalOrder() = default;

  explicit CausalOrder(std::vector<Node> sequence) : sequence_(std::move(sequence)) {
    position_.assign(sequence_.size(), sequence_.size());
    for (std::size_t i = 0; i < sequence_.size(); ++i) {
      const Node g = sequence_[i];
      if (g >= sequence_.size() || position_[g] != sequence_.size()) {
        throw ArgumentError("causal order is not a permutation of 0..p-1");
      }
      position_[g] = i;
    }
  }

  static CausalOrder identity(std::size_t p) {
    std::vector<Node> seq(p);
    for (std::size_t i = 0; i < p; ++i) seq[i] = i;
    return CausalOrder(std::move(seq));
  }

  std::size_t size() const noexcept { return sequence_.size(); }
  const std::vector<Node>& sequence() const noexcept { return sequence_; }
  std::size_t position(Node g) const { return position_.at(g); }
  Node at(std::size_t i) const { return sequence_.at(i); }

  /// Nodes strictly before g in the order (ascending position).
  std::vector<Node> predecessors(Node g) const {
    const std::size_t pos = position(g);
    return {sequence_.begin(), sequence_.begin() + static_cast<std::ptrdiff_t>(pos)};
  }

  friend bool operator==(const CausalOrder&, const CausalOrder&) = default;

 private:
  std::vector<Node> sequence_;
  std::vector<std::size_t> position_;
};

inline bool is_valid_order(const GroupDag& dag, const CausalOrder& order) {
  if (order.size() != dag.p()) {
    throw DimensionError("order has length " + std::to_string(order.size()) + " but graph has p=" +
                         std::to_string(dag.p()));
  }
  return std::all_of(dag.edges().begin(), dag.edges().end(), [&](const Edge& e) {
    return order.position(e.first) < order.position(e.second);
  });
}

/// Fully connected DAG in which every node has all of its predecessors as parents.
inline GroupDag super_dag_from_order(const CausalOrder& order) {
  std::vector<Edge> edges;
  const auto& seq = order.sequence();
  for (std::size_t i = 0; i < seq.size(); ++i)
    for (std::size_t j = i + 1; j < seq.size(); ++j) edges.emplace_back(seq[i], seq[j]);
  return GroupDag(order.size(), edges);
}

namespace detail {

template <typename Next>
NodeSet reach(const GroupDag& dag, Node g, Next next) {
  dag.check(g);
  NodeSet seen;
  std::vector<Node> stack{g};
  while (!stack.empty()) {
    const Node v = stack.back();
    stack.pop_back();
    for (Node w : next(v))
      if (seen.insert(w).second) stack.push_back(w);
  }
  seen.erase(g);
  return seen;
}

}  // namespace detail

/// Proper descendants of g (g itself excluded).
inline NodeSet descendants(const GroupDag& dag, Node g) {
  return detail::reach(dag, g, [&](Node v) -> const std::vector<Node>& { return dag.children(v); });
}

/// Proper ancestors of g (g itself excluded).
inline NodeSet ancestors(const GroupDag& dag, Node g) {
  return detail::reach(dag, g, [&](Node v) -> const std::vector<Node>& { return dag.parents(v); });
}

inline NodeSet non_descendants(const GroupDag& dag, Node g) {
  const NodeSet desc = descendants(dag, g);
  NodeSet out;
  for (Node v = 0; v < dag.p(); ++v)
    if (v != g && !desc.count(v)) out.insert(v);
  return out;
}

/// d-separation of x and y given z via the Bayes-ball reachability
/// algorithm (Koller & Friedman, Alg. 3.1).
inline bool d_separated(const GroupDag& dag, Node x, Node y, const NodeSet& z) {
  dag.check(x);
  dag.check(y);
  for (Node v : z) dag.check(v);
  if (x == y) throw ArgumentError("d_separated requires x != y");
  if (z.count(x) || z.count(y)) throw ArgumentError("conditioning set overlaps {x, y}");

  // Nodes that are in z or have a descendant in z: colliders here are open.
  std::vector<bool> z_or_anc(dag.p(), false);
  {
    std::vector<Node> stack(z.begin(), z.end());
    for (Node v : z) z_or_anc[v] = true;
    while (!stack.empty()) {
      const Node v = stack.back();
      stack.pop_back();
      for (Node u : dag.parents(v))
        if (!z_or_anc[u]) {
          z_or_anc[u] = true;
          stack.push_back(u);
        }
    }
  }

  // State: (node, arrived_from_child). "Up" traversal = arrived from a child.
  std::vector<std::array<bool, 2>> visited(dag.p(), {false, false});
  std::vector<std::pair<Node, bool>> stack{{x, true}};
  while (!stack.empty()) {
    const auto [v, from_child] = stack.back();
    stack.pop_back();
    if (visited[v][from_child]) continue;
    visited[v][from_child] = true;
    if (v == y) return false;
    const bool in_z = z.count(v) > 0;
    if (from_child) {
      if (!in_z) {
        for (Node u : dag.parents(v)) stack.emplace_back(u, true);
        for (Node c : dag.children(v)) stack.emplace_back(c, false);
      }
    } else {
      if (!in_z)
        for (Node c : dag.children(v)) stack.emplace_back(c, false);
      if (z_or_anc[v])
        for (Node u : dag.parents(v)) stack.emplace_back(u, true);
    }
  }
  return true;
}

}  // namespace gresit
