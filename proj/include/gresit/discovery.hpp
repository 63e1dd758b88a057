#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "gresit/common.hpp"
#include "gresit/graph.hpp"
#include "gresit/grouped_data.hpp"
#include "gresit/independence.hpp"
#include "gresit/murgs.hpp"
#include "gresit/regression.hpp"

namespace gresit {

enum class SinkCriterion { statistic, p_value };
enum class Pruning { murgs, greedy_ind, none };

struct MurgsSettings {
  std::size_t grid_size = 20;
  MurgsOptions options;
  SmootherKind smoother = SmootherKind::nadaraya_watson;
};

struct DiscoveryConfig {
  RegressorConfig regressor;
  SinkCriterion sink_criterion = SinkCriterion::statistic;
  Pruning pruning = Pruning::murgs;
  double alpha = 0.01;          // greedy pruning significance level
  double test_fraction = 0.25;  // held-out share for greedy pruning tests
  int passes = 1;               // greedy pruning passes over each parent list
  MurgsSettings murgs;
  std::uint64_t seed = 0;
};

struct CandidateScore {
  Node group = 0;
  double statistic = 0.0;
  double p_value = std::numeric_limits<double>::quiet_NaN();  // p-value mode only
};

struct OrderResult {
  CausalOrder order;
  std::vector<std::vector<CandidateScore>> scores;  // one entry per ordering iteration
  std::size_t regressions = 0;
};

struct NodePruning {
  Node node = 0;
  std::vector<Node> candidates;
  std::vector<Node> parents;
  double lambda = std::numeric_limits<double>::quiet_NaN();  // MURGS only
};

struct DiscoveryResult {
  CausalOrder order;
  GroupDag graph;
  std::vector<std::vector<CandidateScore>> per_iteration_scores;
  std::vector<NodePruning> pruning;
  std::size_t regressions = 0;
  double order_seconds = 0.0;
  double prune_seconds = 0.0;
};

/// Lazily built plug-in smoothers, one per dataset column, shared across the
/// MURGS problems of a single pruning run.
class SmootherCache {
 public:
  SmootherCache(const GroupedDataset& ds, SmootherKind kind)
      : ds_(&ds), kind_(kind), columns_(static_cast<std::size_t>(ds.data().cols())) {}

  const SmootherRef& column(Index c) {
    auto& slot = columns_.at(static_cast<std::size_t>(c));
    if (!slot) slot = std::make_shared<const SmootherMatrix>(plugin_smoother(ds_->data().col(c), kind_));
    return slot;
  }

  std::vector<SmootherRef> group(Node g) {
    std::vector<SmootherRef> out;
    const auto off = static_cast<Index>(ds_->spec().offset(g));
    for (Index h = 0; h < static_cast<Index>(ds_->spec().dim(g)); ++h) out.push_back(column(off + h));
    return out;
  }

 private:
  const GroupedDataset* ds_;
  SmootherKind kind_;
  std::vector<SmootherRef> columns_;
};

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

inline GroupedDataset ensure_standardized(const GroupedDataset& ds) {
  return ds.standardized() ? ds : standardize(ds);
}

inline std::vector<Node> without(const std::vector<Node>& set, Node g) {
  std::vector<Node> out;
  for (Node v : set)
    if (v != g) out.push_back(v);
  return out;
}

}  // namespace detail

/// Ordering: repeatedly regress each remaining group on all the others, score
/// the residual's dependence on the predictors with HSIC, and peel off the
/// least dependent group as the next sink.
inline OrderResult learn_order(const GroupedDataset& ds, const DiscoveryConfig& cfg) {
  const std::size_t p = ds.p();
  if (p == 0) throw ArgumentError("dataset has no groups");
  OrderResult out;
  std::vector<Node> remaining(p);
  std::iota(remaining.begin(), remaining.end(), Node{0});
  std::vector<Node> reversed;  // sinks, last first

  std::size_t iteration = 0;
  while (remaining.size() > 1) {
    std::vector<CandidateScore> scores;
    for (Node g : remaining) {
      const std::vector<Node> others = detail::without(remaining, g);
      const Matrix x = ds.groups_view(others);
      const Matrix y = ds.group_view(g);
      RegressorConfig rc = cfg.regressor;
      rc.seed = derive_seed(cfg.seed, iteration, g);
      const FittedRegressor fit = fit_regressor(x, y, rc);
      ++out.regressions;
      const Matrix r = residuals(fit, x, y);
      CandidateScore s;
      s.group = g;
      if (cfg.sink_criterion == SinkCriterion::p_value) {
        const HsicResult h = hsic_gamma_pvalue(r, x);
        s.statistic = h.statistic;
        s.p_value = *h.p_value;
      } else {
        s.statistic = hsic_statistic(r, x).statistic;
      }
      scores.push_back(s);
    }
    // Candidates are visited in ascending index order; the first best wins ties.
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i) {
      const bool better = cfg.sink_criterion == SinkCriterion::p_value
                              ? (scores[i].p_value > scores[best].p_value ||
                                 (scores[i].p_value == scores[best].p_value &&
                                  scores[i].statistic < scores[best].statistic))
                              : scores[i].statistic < scores[best].statistic;
      if (better) best = i;
    }
    const Node sink = scores[best].group;
    reversed.push_back(sink);
    remaining = detail::without(remaining, sink);
    out.scores.push_back(std::move(scores));
    ++iteration;
  }
  reversed.push_back(remaining.front());
  out.order = CausalOrder(std::vector<Node>(reversed.rbegin(), reversed.rend()));
  return out;
}

/// Pruning with MURGS: for every node, select lambda by GCV over its
/// predecessors and keep the groups with a nonzero fitted block.
inline GroupDag prune_murgs(const GroupedDataset& ds, const CausalOrder& order, const MurgsSettings& settings = {},
                            std::vector<NodePruning>* details = nullptr) {
  if (order.size() != ds.p()) throw DimensionError("order length differs from the number of groups");
  SmootherCache cache(ds, settings.smoother);
  std::vector<Edge> edges;
  for (std::size_t pos = 1; pos < order.size(); ++pos) {
    const Node j = order.at(pos);
    NodePruning np;
    np.node = j;
    np.candidates = order.predecessors(j);
    std::vector<std::vector<SmootherRef>> smoothers;
    for (Node g : np.candidates) smoothers.push_back(cache.group(g));
    const MurgsProblem problem(std::move(smoothers), Matrix(ds.group_view(j)));
    const LambdaSelection sel = select_lambda(problem, settings.grid_size, settings.options);
    np.lambda = sel.lambda;
    for (std::size_t a : sel.fit.active) {
      np.parents.push_back(np.candidates[a]);
      edges.emplace_back(np.candidates[a], j);
    }
    if (details) details->push_back(std::move(np));
  }
  return GroupDag(ds.p(), edges);
}

/// Pruning by greedy independence testing: tentatively drop each candidate
/// parent (ascending order position), refit on the fit partition and keep the
/// removal when the held-out residuals look independent of all candidates
/// (gamma HSIC p-value above alpha).
inline GroupDag prune_greedy_ind(const GroupedDataset& ds, const CausalOrder& order, const DiscoveryConfig& cfg,
                                 std::vector<NodePruning>* details = nullptr) {
  if (order.size() != ds.p()) throw DimensionError("order length differs from the number of groups");
  if (!(cfg.test_fraction > 0.0 && cfg.test_fraction < 1.0)) throw ArgumentError("test fraction must lie in (0, 1)");
  const Index n = ds.n();
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  Rng rng(derive_seed(cfg.seed, 0x7e57));
  std::shuffle(perm.begin(), perm.end(), rng);
  const auto n_test = static_cast<Index>(std::ceil(cfg.test_fraction * static_cast<double>(n)));
  if (n_test < 4 || n - n_test < 10) throw ArgumentError("dataset too small for the fit/test split");
  const GroupedDataset fit_part = ds.rows(std::vector<Index>(perm.begin(), perm.end() - n_test));
  const GroupedDataset test_part = ds.rows(std::vector<Index>(perm.end() - n_test, perm.end()));

  std::vector<Edge> edges;
  std::uint64_t fit_counter = 0;
  for (std::size_t pos = 1; pos < order.size(); ++pos) {
    const Node j = order.at(pos);
    NodePruning np;
    np.node = j;
    np.candidates = order.predecessors(j);
    std::vector<Node> current = np.candidates;
    const Matrix y_fit = fit_part.group_view(j);
    const Matrix y_test = test_part.group_view(j);
    const Matrix all_test = test_part.groups_view(np.candidates);
    for (int pass = 0; pass < std::max(1, cfg.passes); ++pass) {
      for (Node c : np.candidates) {
        if (std::find(current.begin(), current.end(), c) == current.end()) continue;
        const std::vector<Node> tentative = detail::without(current, c);
        Matrix resid;
        if (tentative.empty()) {
          resid = y_test.rowwise() - y_fit.colwise().mean();
        } else {
          RegressorConfig rc = cfg.regressor;
          rc.seed = derive_seed(cfg.seed, 0x9a11, fit_counter++);
          const FittedRegressor fit = fit_regressor(fit_part.groups_view(tentative), y_fit, rc);
          resid = residuals(fit, test_part.groups_view(tentative), y_test);
        }
        const double pval = *hsic_gamma_pvalue(resid, all_test).p_value;
        if (pval > cfg.alpha) current = tentative;
      }
    }
    np.parents = current;
    for (Node g : current) edges.emplace_back(g, j);
    if (details) details->push_back(std::move(np));
  }
  return GroupDag(ds.p(), edges);
}

/// Both phases. Unstandardized input is standardized first.
inline DiscoveryResult discover(const GroupedDataset& input, const DiscoveryConfig& cfg) {
  const GroupedDataset ds = detail::ensure_standardized(input);
  DiscoveryResult out;
  auto start = std::chrono::steady_clock::now();
  OrderResult ord = learn_order(ds, cfg);
  out.order_seconds = detail::seconds_since(start);
  out.order = ord.order;
  out.per_iteration_scores = std::move(ord.scores);
  out.regressions = ord.regressions;

  start = std::chrono::steady_clock::now();
  switch (cfg.pruning) {
    case Pruning::murgs:
      out.graph = prune_murgs(ds, out.order, cfg.murgs, &out.pruning);
      break;
    case Pruning::greedy_ind:
      out.graph = prune_greedy_ind(ds, out.order, cfg, &out.pruning);
      break;
    case Pruning::none:
      out.graph = super_dag_from_order(out.order);
      break;
  }
  out.prune_seconds = detail::seconds_since(start);
  return out;
}

/// Random causal order followed by MURGS pruning.
inline DiscoveryResult random_order_baseline(const GroupedDataset& input, std::uint64_t seed,
                                             const MurgsSettings& settings = {}) {
  const GroupedDataset ds = detail::ensure_standardized(input);
  DiscoveryResult out;
  std::vector<Node> seq(ds.p());
  std::iota(seq.begin(), seq.end(), Node{0});
  Rng rng(seed);
  std::shuffle(seq.begin(), seq.end(), rng);
  out.order = CausalOrder(std::move(seq));
  const auto start = std::chrono::steady_clock::now();
  out.graph = prune_murgs(ds, out.order, settings, &out.pruning);
  out.prune_seconds = detail::seconds_since(start);
  return out;
}

}  // namespace gresit
