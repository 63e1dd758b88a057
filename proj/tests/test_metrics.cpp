#include <gtest/gtest.h>

#include <random>

#include "gresit/metrics.hpp"
#include "support.hpp"

using namespace gresit;

namespace {

GroupDag chain3() { return GroupDag(3, std::vector<Edge>{{0, 1}, {1, 2}}); }

GroupDag relabel(const GroupDag& g, const std::vector<Node>& perm) {
  std::vector<Edge> edges;
  for (const auto& [a, b] : g.edges()) edges.emplace_back(perm[a], perm[b]);
  return GroupDag(g.p(), edges);
}

}  // namespace

TEST(PrecisionRecall, Examples) {
  const auto same = precision_recall_f1(chain3(), chain3());
  EXPECT_EQ(same.precision, 1.0);
  EXPECT_EQ(same.recall, 1.0);
  EXPECT_EQ(same.f1, 1.0);

  const GroupDag est(3, std::vector<Edge>{{0, 1}});
  const GroupDag truth(3, std::vector<Edge>{{0, 1}, {0, 2}});
  const auto s = precision_recall_f1(est, truth);
  EXPECT_DOUBLE_EQ(s.precision, 1.0);
  EXPECT_DOUBLE_EQ(s.recall, 0.5);
  EXPECT_DOUBLE_EQ(s.f1, 2.0 / 3.0);

  const auto empty = precision_recall_f1(GroupDag(3), GroupDag(3));
  EXPECT_EQ(empty.precision, 1.0);
  EXPECT_EQ(empty.recall, 1.0);
  EXPECT_EQ(empty.f1, 1.0);

  const auto none = precision_recall_f1(GroupDag(3), truth);
  EXPECT_EQ(none.precision, 0.0);
  EXPECT_EQ(none.f1, 0.0);
  EXPECT_THROW(precision_recall_f1(GroupDag(2), truth), DimensionError);
}

TEST(Shd, Examples) {
  EXPECT_EQ(shd(chain3(), chain3()), 0u);
  EXPECT_EQ(shd(GroupDag(3, std::vector<Edge>{{1, 0}, {1, 2}}), chain3()), 1u);
  EXPECT_EQ(shd(GroupDag(3, std::vector<Edge>{{0, 1}, {0, 2}}), chain3()), 2u);
  EXPECT_THROW(shd(GroupDag(4), chain3()), DimensionError);
}

TEST(ValidAdjustment, Examples) {
  const GroupDag simple(2, std::vector<Edge>{{0, 1}});
  EXPECT_TRUE(valid_adjustment(simple, 0, 1, {}));
  // 0 <- 2 -> 1 and 0 -> 1
  const GroupDag confounded(3, std::vector<Edge>{{2, 0}, {2, 1}, {0, 1}});
  EXPECT_FALSE(valid_adjustment(confounded, 0, 1, {}));
  EXPECT_TRUE(valid_adjustment(confounded, 0, 1, {2}));
  EXPECT_FALSE(valid_adjustment(chain3(), 0, 2, {1}));
  EXPECT_THROW(valid_adjustment(chain3(), 0, 2, {0}), ArgumentError);
}

TEST(ValidAdjustment, AgreesWithPathOracle) {
  std::mt19937_64 rng(17);
  for (int rep = 0; rep < 200; ++rep) {
    const GroupDag dag = oracle::random_dag(2 + rep % 4, 0.5, rng);
    for (Node x = 0; x < dag.p(); ++x)
      for (Node y = 0; y < dag.p(); ++y) {
        if (x == y) continue;
        std::vector<Node> rest;
        for (Node v = 0; v < dag.p(); ++v)
          if (v != x && v != y) rest.push_back(v);
        for (unsigned mask = 0; mask < (1u << rest.size()); ++mask) {
          NodeSet z;
          for (std::size_t b = 0; b < rest.size(); ++b)
            if (mask & (1u << b)) z.insert(rest[b]);
          ASSERT_EQ(valid_adjustment(dag, x, y, z), oracle::valid_adjustment_by_paths(dag, x, y, z));
        }
      }
  }
}

TEST(Sid, Examples) {
  EXPECT_EQ(sid(chain3(), chain3()), 0u);
  // Empty estimate against the chain: the empty set is valid for the pairs
  // (0,1), (0,2), (1,2); the open paths 1 <- 0 and 2 <- 1 <- 0 spoil (1,0),
  // (2,0) and (2,1).
  EXPECT_EQ(sid(GroupDag(3), chain3()), oracle::sid_by_paths(GroupDag(3), chain3()));
  EXPECT_EQ(sid(GroupDag(3), chain3()), 3u);
  const GroupDag fork(3, std::vector<Edge>{{2, 0}, {2, 1}, {0, 1}});
  EXPECT_EQ(sid(GroupDag(3), fork), oracle::sid_by_paths(GroupDag(3), fork));
  // Only node 2 has no back-door path to anything.
  EXPECT_EQ(sid(GroupDag(3), fork), 4u);
}

TEST(Sid, UpperBound) {
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 50; ++rep) {
    const GroupDag a = oracle::random_dag(5, 0.6, rng), b = oracle::random_dag(5, 0.6, rng);
    EXPECT_LE(sid(a, b), 20u);
    EXPECT_LE(aaid(a, b), 20u);
  }
}

TEST(Aaid, Examples) {
  EXPECT_EQ(aaid(chain3(), chain3()), 0u);
  EXPECT_EQ(aaid(super_dag_from_order(CausalOrder({0, 1, 2})), chain3()), 0u);
  const GroupDag reversed(3, std::vector<Edge>{{2, 1}, {1, 0}});
  EXPECT_EQ(aaid(reversed, chain3()), oracle::aaid_by_paths(reversed, chain3()));
  // Every ordered pair is wrong: either a true descendant sits among the
  // estimated ancestors, or the path back to 0 stays open.
  EXPECT_EQ(aaid(reversed, chain3()), 6u);
}

TEST(Oaid, Examples) {
  EXPECT_EQ(oaid(CausalOrder({0, 1, 2}), chain3()), 0u);
  const GroupDag chain2(2, std::vector<Edge>{{0, 1}});
  EXPECT_EQ(oaid(CausalOrder({1, 0}), chain2), aaid(super_dag_from_order(CausalOrder({1, 0})), chain2));
  EXPECT_EQ(oaid(CausalOrder({1, 0}), chain2), 2u);
  EXPECT_THROW(oaid(CausalOrder({0, 1}), chain3()), DimensionError);
}

TEST(Distances, MatchIndependentOracleOnRandomPairs) {
  std::mt19937_64 rng(23);
  std::uniform_int_distribution<std::size_t> size(2, 5);
  std::uniform_real_distribution<double> dens(0.0, 1.0);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t p = size(rng);
    const GroupDag est = oracle::random_dag(p, dens(rng), rng);
    const GroupDag truth = oracle::random_dag(p, dens(rng), rng);
    ASSERT_EQ(sid(est, truth), oracle::sid_by_paths(est, truth));
    ASSERT_EQ(aaid(est, truth), oracle::aaid_by_paths(est, truth));
  }
}

TEST(Distances, OrderAgreementGivesZeroAaidExhaustively) {
  // Every DAG on up to 4 nodes (as a subset of forward edges of some order,
  // relabeled by every permutation) against every order valid for it.
  for (std::size_t p = 1; p <= 4; ++p) {
    std::vector<Edge> forward;
    for (Node a = 0; a < p; ++a)
      for (Node b = a + 1; b < p; ++b) forward.emplace_back(a, b);
    std::vector<Node> perm(p);
    std::iota(perm.begin(), perm.end(), Node{0});
    std::set<std::set<Edge>> seen;
    do {
      for (unsigned mask = 0; mask < (1u << forward.size()); ++mask) {
        std::vector<Edge> edges;
        for (std::size_t b = 0; b < forward.size(); ++b)
          if (mask & (1u << b)) edges.emplace_back(perm[forward[b].first], perm[forward[b].second]);
        const GroupDag truth(p, edges);
        if (!seen.insert(truth.edges()).second) continue;
        std::vector<Node> order(p);
        std::iota(order.begin(), order.end(), Node{0});
        do {
          const CausalOrder o(order);
          if (!is_valid_order(truth, o)) continue;
          ASSERT_EQ(aaid(super_dag_from_order(o), truth), 0u);
          ASSERT_EQ(oaid(o, truth), 0u);
        } while (std::next_permutation(order.begin(), order.end()));
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
    if (p == 3) {
      EXPECT_EQ(seen.size(), 25u);
    }
    if (p == 4) {
      EXPECT_EQ(seen.size(), 543u);
    }
  }
}

TEST(Distances, PermutationEquivariance) {
  std::mt19937_64 rng(31);
  for (int rep = 0; rep < 50; ++rep) {
    const GroupDag est = oracle::random_dag(5, 0.4, rng), truth = oracle::random_dag(5, 0.4, rng);
    std::vector<Node> perm{0, 1, 2, 3, 4};
    std::shuffle(perm.begin(), perm.end(), rng);
    const GroupDag e2 = relabel(est, perm), t2 = relabel(truth, perm);
    EXPECT_EQ(sid(est, truth), sid(e2, t2));
    EXPECT_EQ(aaid(est, truth), aaid(e2, t2));
    EXPECT_EQ(shd(est, truth), shd(e2, t2));
    EXPECT_EQ(precision_recall_f1(est, truth).f1, precision_recall_f1(e2, t2).f1);
  }
}

TEST(Evaluate, Report) {
  const MetricsReport r = evaluate(chain3(), chain3(), CausalOrder({0, 1, 2}));
  EXPECT_EQ(r.p, 3u);
  EXPECT_EQ(r.f1, 1.0);
  EXPECT_EQ(r.shd, 0u);
  EXPECT_EQ(r.sid, 0u);
  EXPECT_EQ(r.aaid, 0u);
  ASSERT_TRUE(r.oaid.has_value());
  EXPECT_EQ(*r.oaid, 0u);
  EXPECT_FALSE(evaluate(chain3(), chain3()).oaid.has_value());
}
