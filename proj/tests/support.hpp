#pragma once

// Brute-force reference implementations used only by the tests. None of them
// call into the library's graph algorithms beyond reading edges.

#include <functional>
#include <random>
#include <set>
#include <vector>

#include "gresit/graph.hpp"

namespace gresit::oracle {

inline GroupDag random_dag(std::size_t p, double prob, std::mt19937_64& rng) {
  std::vector<Node> order(p);
  for (std::size_t i = 0; i < p; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  std::bernoulli_distribution coin(prob);
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i + 1; j < p; ++j)
      if (coin(rng)) edges.emplace_back(order[i], order[j]);
  return GroupDag(p, edges);
}

// A path is a node sequence; consecutive nodes are adjacent in the skeleton.
using Path = std::vector<Node>;

inline std::vector<Path> all_simple_paths(const GroupDag& dag, Node from, Node to) {
  std::vector<Path> out;
  Path current{from};
  std::vector<bool> used(dag.p(), false);
  used[from] = true;
  std::function<void(Node)> walk = [&](Node v) {
    if (v == to) {
      out.push_back(current);
      return;
    }
    for (Node w = 0; w < dag.p(); ++w) {
      if (used[w] || !(dag.has_edge(v, w) || dag.has_edge(w, v))) continue;
      used[w] = true;
      current.push_back(w);
      walk(w);
      current.pop_back();
      used[w] = false;
    }
  };
  walk(from);
  return out;
}

inline bool reaches(const GroupDag& dag, Node from, Node to) {
  if (from == to) return true;
  std::vector<bool> seen(dag.p(), false);
  std::vector<Node> stack{from};
  while (!stack.empty()) {
    const Node v = stack.back();
    stack.pop_back();
    for (Node w = 0; w < dag.p(); ++w) {
      if (!dag.has_edge(v, w) || seen[w]) continue;
      if (w == to) return true;
      seen[w] = true;
      stack.push_back(w);
    }
  }
  return false;
}

inline bool path_blocked(const GroupDag& dag, const Path& path, const std::set<Node>& z) {
  for (std::size_t i = 1; i + 1 < path.size(); ++i) {
    const Node prev = path[i - 1], mid = path[i], next = path[i + 1];
    const bool collider = dag.has_edge(prev, mid) && dag.has_edge(next, mid);
    if (collider) {
      bool opened = false;
      for (Node c : z)
        if (reaches(dag, mid, c)) opened = true;
      if (!opened) return true;
    } else if (z.count(mid)) {
      return true;
    }
  }
  return false;
}

inline bool dsep_by_paths(const GroupDag& dag, Node x, Node y, const std::set<Node>& z) {
  for (const Path& path : all_simple_paths(dag, x, y))
    if (!path_blocked(dag, path, z)) return false;
  return true;
}

inline bool is_directed_from_start(const GroupDag& dag, const Path& path) {
  for (std::size_t i = 0; i + 1 < path.size(); ++i)
    if (!dag.has_edge(path[i], path[i + 1])) return false;
  return true;
}

// Adjustment criterion checked path by path: no member of z may be a
// descendant of a node (other than x) on a directed x -> y path, and every
// non-directed path must be blocked.
inline bool valid_adjustment_by_paths(const GroupDag& dag, Node x, Node y, const std::set<Node>& z) {
  const auto paths = all_simple_paths(dag, x, y);
  for (const Path& path : paths) {
    if (is_directed_from_start(dag, path)) {
      for (std::size_t i = 1; i < path.size(); ++i)
        for (Node c : z)
          if (reaches(dag, path[i], c)) return false;
    }
  }
  for (const Path& path : paths)
    if (!is_directed_from_start(dag, path) && !path_blocked(dag, path, z)) return false;
  return true;
}

inline std::set<Node> proper_ancestors_by_search(const GroupDag& dag, Node x) {
  std::set<Node> out;
  for (Node v = 0; v < dag.p(); ++v)
    if (v != x && reaches(dag, v, x)) out.insert(v);
  return out;
}

inline std::size_t distance_by_paths(const GroupDag& est, const GroupDag& truth, bool ancestor_sets) {
  std::size_t wrong = 0;
  for (Node x = 0; x < est.p(); ++x) {
    std::set<Node> z;
    if (ancestor_sets) {
      z = proper_ancestors_by_search(est, x);
    } else {
      for (Node v = 0; v < est.p(); ++v)
        if (est.has_edge(v, x)) z.insert(v);
    }
    for (Node y = 0; y < est.p(); ++y) {
      if (y == x) continue;
      if (z.count(y)) {
        if (reaches(truth, x, y)) ++wrong;
      } else if (!valid_adjustment_by_paths(truth, x, y, z)) {
        ++wrong;
      }
    }
  }
  return wrong;
}

inline std::size_t sid_by_paths(const GroupDag& est, const GroupDag& truth) {
  return distance_by_paths(est, truth, false);
}
inline std::size_t aaid_by_paths(const GroupDag& est, const GroupDag& truth) {
  return distance_by_paths(est, truth, true);
}

}  // namespace gresit::oracle
