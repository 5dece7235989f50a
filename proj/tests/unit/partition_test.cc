#include <gtest/gtest.h>

#include <map>

#include "lmgnn/errors.hpp"
#include "lmgnn/sampling.hpp"
#include "test_support.hpp"

namespace lmgnn {
namespace {

HeteroGraph ring(NodeId n) {
  std::vector<Edge> e;
  for (NodeId i = 0; i < n; ++i) e.push_back({i, (i + 1) % n});
  return HeteroGraph({"a"}, {n}, {{0, "r", 0}}, {e});
}

TEST(Partitions, LeafCountOutOfRange) {
  HeteroGraph g = ring(10);
  EXPECT_THROW(assign_partitions(g, 1, 0), ContractError);
  EXPECT_THROW(assign_partitions(g, 11, 0), ContractError);
}

TEST(Partitions, BalancedLeaves) {
  HeteroGraph g = ring(100);
  PartitionMap pm = assign_partitions(g, 4, 3);
  for (std::size_t s : pm.leaf_sizes()) EXPECT_EQ(s, 25u);
  HeteroGraph h = testing::random_graph(1, 23, 14, 0.1);
  PartitionMap pk = assign_partitions(h, 5, 3);
  auto sizes = pk.leaf_sizes();
  EXPECT_LE(*std::max_element(sizes.begin(), sizes.end()) - *std::min_element(sizes.begin(), sizes.end()), 1u);
}

TEST(Partitions, EveryNodeOneLeafNestedInGroup) {
  HeteroGraph g = testing::random_graph(2, 30, 30, 0.05);
  PartitionMap pm = assign_partitions(g, 6, 0);
  ASSERT_EQ(pm.leaf_of_node.size(), static_cast<std::size_t>(g.total_nodes()));
  for (auto leaf : pm.leaf_of_node) {
    EXPECT_GE(leaf, 0);
    EXPECT_LT(leaf, pm.num_leaves);
  }
  ASSERT_EQ(pm.group_of_leaf.size(), 6u);
  EXPECT_EQ(pm.num_groups, 3);
  for (std::int32_t l = 0; l < 6; ++l) EXPECT_EQ(pm.group_of_leaf[static_cast<std::size_t>(l)], l / 2);
}

TEST(Partitions, RecoversTwoPlantedClusters) {
  const NodeId half = 50;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    std::mt19937_64 rng(100 + seed);
    std::bernoulli_distribution intra(0.2), inter(0.005);
    std::vector<Edge> e;
    for (NodeId u = 0; u < 2 * half; ++u)
      for (NodeId v = u + 1; v < 2 * half; ++v)
        if ((u / half == v / half) ? intra(rng) : inter(rng)) e.push_back({u, v});
    HeteroGraph g({"a"}, {2 * half}, {{0, "r", 0}}, {e});
    PartitionMap pm = assign_partitions(g, 2, seed);
    std::size_t agree = 0;
    for (NodeId c = 0; c < 2; ++c) {
      std::map<std::int32_t, std::size_t> votes;
      for (NodeId u = c * half; u < (c + 1) * half; ++u) ++votes[pm.leaf(g, {0, u})];
      std::size_t best = 0;
      for (auto& [leaf, n] : votes) best = std::max(best, n);
      agree += best;
    }
    EXPECT_GE(static_cast<double>(agree) / (2 * half), 0.9) << "seed " << seed;
  }
}

TEST(Partitions, Deterministic) {
  HeteroGraph g = testing::random_graph(3, 40, 40, 0.05);
  EXPECT_EQ(assign_partitions(g, 4, 9).leaf_of_node, assign_partitions(g, 4, 9).leaf_of_node);
}

}  // namespace
}  // namespace lmgnn
