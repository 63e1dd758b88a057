#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <vector>

#include "gresit/graph.hpp"

namespace gresit {

struct EdgeScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Set-based precision/recall/F1. Conventions: an empty estimate scores
/// precision 1 only if the truth is also empty (0 otherwise); an empty truth
/// scores recall 1.
template <typename T>
EdgeScores set_scores(const std::set<T>& estimated, const std::set<T>& truth) {
  std::size_t hits = 0;
  for (const auto& e : estimated) hits += truth.count(e);
  EdgeScores s;
  s.precision = estimated.empty() ? (truth.empty() ? 1.0 : 0.0)
                                  : static_cast<double>(hits) / static_cast<double>(estimated.size());
  s.recall = truth.empty() ? 1.0 : static_cast<double>(hits) / static_cast<double>(truth.size());
  s.f1 = (s.precision + s.recall > 0.0) ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

inline void check_same_size(const GroupDag& a, const GroupDag& b) {
  if (a.p() != b.p()) {
    throw DimensionError("graphs have different node counts (" + std::to_string(a.p()) + " vs " +
                         std::to_string(b.p()) + ")");
  }
}

inline EdgeScores precision_recall_f1(const GroupDag& est, const GroupDag& truth) {
  check_same_size(est, truth);
  return set_scores(est.edges(), truth.edges());
}

/// Number of unordered node pairs whose edge status differs; a reversal counts once.
inline std::size_t shd(const GroupDag& est, const GroupDag& truth) {
  check_same_size(est, truth);
  std::size_t count = 0;
  for (Node a = 0; a < est.p(); ++a)
    for (Node b = a + 1; b < est.p(); ++b) {
      const bool same = est.has_edge(a, b) == truth.has_edge(a, b) && est.has_edge(b, a) == truth.has_edge(b, a);
      if (!same) ++count;
    }
  return count;
}

/// Generalized adjustment criterion for the effect of x on y in `truth`:
/// (a) z avoids every node on a proper causal path from x to y (x excluded)
/// and all their descendants; (b) z d-separates x and y once the first edges
/// of those causal paths are removed.
inline bool valid_adjustment(const GroupDag& truth, Node x, Node y, const NodeSet& z) {
  truth.check(x);
  truth.check(y);
  if (x == y) throw ArgumentError("valid_adjustment requires x != y");
  if (z.count(x) || z.count(y)) throw ArgumentError("adjustment set overlaps {x, y}");

  const NodeSet desc_x = descendants(truth, x);
  NodeSet causal;  // nodes on causal paths x -> ... -> y, excluding x
  if (desc_x.count(y)) {
    const NodeSet anc_y = ancestors(truth, y);
    for (Node w : desc_x)
      if (w == y || anc_y.count(w)) causal.insert(w);
  }
  for (Node w : causal) {
    if (z.count(w)) return false;
    for (Node d : descendants(truth, w))
      if (z.count(d)) return false;
  }

  std::vector<Edge> kept;
  for (const auto& e : truth.edges())
    if (!(e.first == x && causal.count(e.second))) kept.push_back(e);
  const GroupDag backdoor(truth.p(), kept);
  return d_separated(backdoor, x, y, z);
}

namespace detail {

template <typename AdjustmentSet>
std::size_t identification_distance(const GroupDag& est, const GroupDag& truth, AdjustmentSet adjustment_set) {
  check_same_size(est, truth);
  std::size_t wrong = 0;
  for (Node x = 0; x < est.p(); ++x) {
    const NodeSet z = adjustment_set(x);
    const NodeSet desc_truth = descendants(truth, x);
    for (Node y = 0; y < est.p(); ++y) {
      if (y == x) continue;
      if (z.count(y)) {
        // The estimate claims y is not affected by x.
        if (desc_truth.count(y)) ++wrong;
      } else if (!valid_adjustment(truth, x, y, z)) {
        ++wrong;
      }
    }
  }
  return wrong;
}

}  // namespace detail

/// Structural intervention distance: parent adjustment in the estimate.
inline std::size_t sid(const GroupDag& est, const GroupDag& truth) {
  return detail::identification_distance(est, truth, [&](Node x) {
    const auto& pa = est.parents(x);
    return NodeSet(pa.begin(), pa.end());
  });
}

/// Ancestor adjustment identification distance.
inline std::size_t aaid(const GroupDag& est, const GroupDag& truth) {
  return detail::identification_distance(est, truth, [&](Node x) { return ancestors(est, x); });
}

/// Order adjustment identification distance: AAID of the order's super-DAG.
inline std::size_t oaid(const CausalOrder& order, const GroupDag& truth) {
  if (order.size() != truth.p()) throw DimensionError("order length differs from the graph size");
  return aaid(super_dag_from_order(order), truth);
}

struct MetricsReport {
  std::size_t p = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t shd = 0;
  std::size_t sid = 0;
  std::size_t aaid = 0;
  std::optional<std::size_t> oaid;  // needs the estimated order
};

inline MetricsReport evaluate(const GroupDag& est, const GroupDag& truth,
                              const std::optional<CausalOrder>& order = std::nullopt) {
  check_same_size(est, truth);
  MetricsReport r;
  r.p = est.p();
  const auto scores = precision_recall_f1(est, truth);
  r.precision = scores.precision;
  r.recall = scores.recall;
  r.f1 = scores.f1;
  r.shd = gresit::shd(est, truth);
  r.sid = gresit::sid(est, truth);
  r.aaid = gresit::aaid(est, truth);
  if (order) r.oaid = gresit::oaid(*order, truth);
  return r;
}

}  // namespace gresit
