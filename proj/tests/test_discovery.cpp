#include <gtest/gtest.h>

#include <random>

#include "gresit/discovery.hpp"
#include "gresit/metrics.hpp"
#include "gresit/synth.hpp"

using namespace gresit;

namespace {

DiscoveryConfig quick_config(std::uint64_t seed) {
  DiscoveryConfig cfg;
  cfg.regressor.epochs = 40;
  cfg.regressor.hidden_layers = {8};
  cfg.seed = seed;
  return cfg;
}

GroupedDataset noise_dataset(Index n, std::size_t p, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix x(n, static_cast<Index>(p * d));
  for (Index i = 0; i < x.size(); ++i) x.data()[i] = normal(rng);
  return standardize(GroupedDataset(x, GroupSpec::uniform(p, d)));
}

// Chain 0 -> 1 -> 2 with one-dimensional groups and strong nonlinear links.
GroupedDataset chain_dataset(Index n, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  Matrix x(n, 3);
  for (Index i = 0; i < n; ++i) {
    x(i, 0) = u(rng);
    x(i, 1) = 2.0 * std::sin(1.5 * x(i, 0)) + 0.3 * normal(rng);
    x(i, 2) = x(i, 1) * x(i, 1) - 1.0 + 0.3 * normal(rng);
  }
  return standardize(GroupedDataset(x, GroupSpec::uniform(3, 1)));
}

bool consistent(const DiscoveryResult& r) {
  if (!is_valid_order(r.graph, r.order)) return false;
  const GroupDag super = super_dag_from_order(r.order);
  for (const auto& e : r.graph.edges())
    if (!super.has_edge(e.first, e.second)) return false;
  return true;
}

}  // namespace

TEST(LearnOrder, SingleGroupNeedsNoRegression) {
  const GroupedDataset ds = noise_dataset(50, 1, 2, 1);
  const OrderResult r = learn_order(ds, quick_config(1));
  EXPECT_EQ(r.order.sequence(), std::vector<Node>{0});
  EXPECT_EQ(r.regressions, 0u);
  EXPECT_TRUE(r.scores.empty());
}

TEST(LearnOrder, RegressionCountAndScoreShape) {
  const GroupedDataset ds = noise_dataset(80, 4, 2, 2);
  const OrderResult r = learn_order(ds, quick_config(2));
  EXPECT_EQ(r.regressions, 4u + 3u + 2u);
  ASSERT_EQ(r.scores.size(), 3u);
  for (std::size_t it = 0; it < 3; ++it) EXPECT_EQ(r.scores[it].size(), 4 - it);
  for (const auto& s : r.scores[0]) EXPECT_TRUE(std::isnan(s.p_value));

  DiscoveryConfig pv = quick_config(2);
  pv.sink_criterion = SinkCriterion::p_value;
  const OrderResult rp = learn_order(ds, pv);
  for (const auto& s : rp.scores[0]) {
    EXPECT_GE(s.p_value, 0.0);
    EXPECT_LE(s.p_value, 1.0);
  }
}

TEST(LearnOrder, BivariateChainPutsCauseFirst) {
  int correct = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(1000 + seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix x(2000, 2);
    for (Index i = 0; i < 2000; ++i) {
      x(i, 0) = normal(rng);
      x(i, 1) = std::sin(3.0 * x(i, 0)) + 0.5 * normal(rng);
    }
    const GroupedDataset ds = standardize(GroupedDataset(x, GroupSpec::uniform(2, 1)));
    DiscoveryConfig cfg;
    cfg.seed = seed;
    if (learn_order(ds, cfg).order.at(0) == 0) ++correct;
  }
  EXPECT_GE(correct, 8);
}

TEST(LearnOrder, IndependentGroupsScoreBelowDependentOnes) {
  const GroupedDataset indep = noise_dataset(400, 3, 1, 3);
  const GroupedDataset dep = chain_dataset(400, 3);
  const OrderResult ri = learn_order(indep, quick_config(3));
  const OrderResult rd = learn_order(dep, quick_config(3));
  double max_indep = 0.0, max_dep = 0.0;
  for (const auto& s : ri.scores[0]) max_indep = std::max(max_indep, s.statistic);
  for (const auto& s : rd.scores[0]) max_dep = std::max(max_dep, s.statistic);
  EXPECT_LT(max_indep, max_dep);
}

TEST(PruneMurgs, TrivialAndChain) {
  const GroupedDataset single = noise_dataset(30, 1, 1, 4);
  EXPECT_EQ(prune_murgs(single, CausalOrder({0})).edge_count(), 0u);

  // The grandparent predicts the shrunken part of its child's contribution, so
  // the GCV-selected fit may keep 0 -> 2 as well; the true edges must survive.
  int recovered = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const GroupDag g = prune_murgs(chain_dataset(2000, 50 + seed), CausalOrder({0, 1, 2}));
    if (g.has_edge(0, 1) && g.has_edge(1, 2)) ++recovered;
  }
  EXPECT_GE(recovered, 7);
}

TEST(PruneMurgs, IndependentGroupsGiveEmptyGraph) {
  int empty = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const GroupedDataset ds = noise_dataset(1000, 3, 2, 70 + seed);
    std::vector<NodePruning> details;
    if (prune_murgs(ds, CausalOrder({2, 0, 1}), {}, &details).edge_count() == 0) ++empty;
    EXPECT_EQ(details.size(), 2u);
  }
  EXPECT_GE(empty, 8);
}

TEST(PruneGreedy, EmptyCandidatesAndAlphaLimits) {
  const GroupedDataset ds = chain_dataset(200, 5);
  DiscoveryConfig cfg = quick_config(5);
  EXPECT_EQ(prune_greedy_ind(noise_dataset(40, 1, 1, 1), CausalOrder({0}), cfg).edge_count(), 0u);

  // A removal survives only when its p-value exceeds alpha, so alpha = 1
  // never removes anything and alpha = 0 removes every edge with p > 0.
  cfg.alpha = 1.0;
  EXPECT_EQ(prune_greedy_ind(ds, CausalOrder({0, 1, 2}), cfg).edge_count(), 3u);
  cfg.alpha = 0.0;
  EXPECT_EQ(prune_greedy_ind(ds, CausalOrder({0, 1, 2}), cfg).edge_count(), 0u);
}

TEST(PruneGreedy, SplitValidation) {
  DiscoveryConfig cfg = quick_config(6);
  cfg.test_fraction = 1.0;
  EXPECT_THROW(prune_greedy_ind(chain_dataset(100, 1), CausalOrder({0, 1, 2}), cfg), ArgumentError);
  cfg.test_fraction = 0.25;
  EXPECT_THROW(prune_greedy_ind(chain_dataset(12, 1), CausalOrder({0, 1, 2}), cfg), ArgumentError);
}

TEST(Discover, PruningNoneDeterminismAndConsistency) {
  const GroupedDataset ds = noise_dataset(120, 4, 2, 8);
  DiscoveryConfig cfg = quick_config(8);
  cfg.pruning = Pruning::none;
  const DiscoveryResult a = discover(ds, cfg);
  EXPECT_EQ(a.graph, super_dag_from_order(a.order));
  EXPECT_EQ(a.graph.edge_count(), 6u);

  for (Pruning mode : {Pruning::murgs, Pruning::greedy_ind}) {
    cfg.pruning = mode;
    const DiscoveryResult r1 = discover(ds, cfg);
    const DiscoveryResult r2 = discover(ds, cfg);
    EXPECT_EQ(r1.order, r2.order);
    EXPECT_EQ(r1.graph, r2.graph);
    ASSERT_EQ(r1.per_iteration_scores.size(), r2.per_iteration_scores.size());
    for (std::size_t i = 0; i < r1.per_iteration_scores.size(); ++i)
      for (std::size_t j = 0; j < r1.per_iteration_scores[i].size(); ++j)
        EXPECT_EQ(r1.per_iteration_scores[i][j].statistic, r2.per_iteration_scores[i][j].statistic);
    EXPECT_TRUE(consistent(r1));
  }
}

TEST(Discover, StandardizesRawInput) {
  GroupedDataset raw = noise_dataset(100, 3, 1, 9);
  Matrix shifted = raw.data() * 5.0;
  shifted.array() += 3.0;
  const GroupedDataset unscaled(shifted, raw.spec());
  DiscoveryConfig cfg = quick_config(9);
  EXPECT_EQ(discover(unscaled, cfg).graph, discover(raw, cfg).graph);
}

TEST(RandomOrderBaseline, TrivialAndDeterministic) {
  EXPECT_EQ(random_order_baseline(noise_dataset(30, 1, 1, 1), 3).order.sequence(), std::vector<Node>{0});
  const GroupedDataset ds = chain_dataset(300, 10);
  const DiscoveryResult a = random_order_baseline(ds, 42);
  const DiscoveryResult b = random_order_baseline(ds, 42);
  EXPECT_EQ(a.order, b.order);
  EXPECT_EQ(a.graph, b.graph);
  EXPECT_TRUE(consistent(a));
}

TEST(Discover, TrueSinkHasSmallestResidualDependence) {
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    GanmSpec spec;
    spec.group_dims = {2, 2, 2};
    spec.graph = GroupDag(3, std::vector<Edge>{{0, 1}, {1, 2}, {0, 2}});
    spec.n = 2000;
    spec.seed = 300 + seed;
    const auto [ds, truth] = generate(spec);
    DiscoveryConfig cfg;
    cfg.seed = seed;
    const OrderResult r = learn_order(ds, cfg);
    const auto& first = r.scores.front();
    const auto best = std::min_element(first.begin(), first.end(), [](const auto& a, const auto& b) {
      return a.statistic < b.statistic;
    });
    if (best->group == 2) ++hits;
  }
  EXPECT_GE(hits, 8);
}
