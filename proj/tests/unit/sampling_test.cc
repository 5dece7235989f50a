#include <gtest/gtest.h>

#include <queue>
#include <set>

#include "lmgnn/errors.hpp"
#include "lmgnn/sampling.hpp"
#include "test_support.hpp"

namespace lmgnn {
namespace {

// All nodes within `hops` message-passing steps of the targets.
std::set<NodeRef> bfs_neighborhood(const HeteroGraph& g, std::span<const NodeRef> targets,
                                   int hops, bool include_reverse) {
  const auto rels = g.message_relations(include_reverse);
  std::set<NodeRef> seen(targets.begin(), targets.end());
  std::vector<NodeRef> frontier(seen.begin(), seen.end());
  for (int h = 0; h < hops; ++h) {
    std::vector<NodeRef> next;
    for (const NodeRef& n : frontier)
      for (const auto& m : rels) {
        if (m.target_type != n.type) continue;
        for (NodeId v : g.neighbors(m, n.local)) {
          NodeRef ref{m.neighbor_type, v};
          if (seen.insert(ref).second) next.push_back(ref);
        }
      }
    frontier = std::move(next);
  }
  return seen;
}

void expect_well_formed(const EgoBatch& b) {
  for (std::size_t l = 0; l < b.blocks.size(); ++l) {
    const Block& blk = b.blocks[l];
    ASSERT_EQ(blk.edges.size(), b.relations.size());
    for (const auto& e : blk.edges) {
      ASSERT_EQ(e.dst.size(), e.src.size());
      for (std::size_t k = 0; k < e.dst.size(); ++k) {
        EXPECT_LT(static_cast<std::size_t>(e.dst[k]), blk.num_targets);
        EXPECT_LT(static_cast<std::size_t>(e.src[k]), blk.sources.size());
      }
    }
    if (l + 1 < b.blocks.size()) {
      const Block& inner = b.blocks[l + 1];
      ASSERT_EQ(inner.sources.size(), blk.num_targets);
      EXPECT_TRUE(std::equal(inner.sources.begin(), inner.sources.end(), blk.sources.begin()));
    }
  }
  const Block& last = b.blocks.back();
  ASSERT_EQ(last.num_targets, b.targets.size());
  EXPECT_TRUE(std::equal(b.targets.begin(), b.targets.end(), last.sources.begin()));
}

TEST(SampleNeighbors, EmptyTargetsRejected) {
  HeteroGraph g = testing::random_graph(0, 5, 5, 0.3);
  EXPECT_THROW(sample_neighbors(g, {}, {}, 0), ContractError);
}

TEST(SampleNeighbors, IsolatedTarget) {
  HeteroGraph g({"a"}, {3}, {{0, "r", 0}}, {{{1, 2}}});
  const std::vector<NodeRef> t = {{0, 0}};
  EgoBatch b = sample_neighbors(g, t, {}, 0);
  ASSERT_EQ(b.num_layers(), 2u);
  for (const Block& blk : b.blocks) EXPECT_EQ(blk.sources, t);
}

TEST(SampleNeighbors, FourHundredSourceBound) {
  const NodeId n = 500;
  std::vector<Edge> edges;
  for (NodeId s = 0; s < n; ++s)
    for (NodeId d = 0; d < n; ++d)
      if (s != d) edges.push_back({s, d});
  HeteroGraph g({"a"}, {n}, {{0, "r", 0}}, {edges});
  SamplerConfig cfg;
  cfg.fanouts = {20};
  cfg.num_layers = 2;
  cfg.include_reverse = false;
  const std::vector<NodeRef> t = {{0, 0}};
  cfg.dedup = false;
  EgoBatch tree = sample_neighbors(g, t, cfg, 1);
  EXPECT_EQ(tree.input_nodes().size(), 421u);
  cfg.dedup = true;
  EgoBatch dedup = sample_neighbors(g, t, cfg, 1);
  EXPECT_LE(dedup.input_nodes().size(), 421u);
  expect_well_formed(tree);
  expect_well_formed(dedup);
}

TEST(SampleNeighbors, PathGraphWithinTwoHops) {
  HeteroGraph g({"a"}, {5}, {{0, "r", 0}}, {{{0, 1}, {1, 2}, {2, 3}, {3, 4}}});
  SamplerConfig cfg;
  cfg.fanouts = {1};
  cfg.num_layers = 2;
  for (NodeId target = 0; target < 5; ++target) {
    const std::vector<NodeRef> t = {{0, target}};
    const auto oracle = bfs_neighborhood(g, t, 2, true);
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      EgoBatch b = sample_neighbors(g, t, cfg, seed);
      for (const NodeRef& n : b.input_nodes()) EXPECT_TRUE(oracle.count(n)) << target << " " << seed;
    }
  }
}

TEST(SampleNeighbors, SaturatingEqualsBfs) {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    HeteroGraph g = testing::random_graph(seed, 20, 15, 0.08);
    for (int layers = 1; layers <= 3; ++layers)
      for (bool rev : {true, false}) {
        const std::vector<NodeRef> t = {{0, static_cast<NodeId>(seed)}, {1, 3}};
        EgoBatch b = sample_neighbors(g, t, SamplerConfig::saturating(layers, rev), seed);
        const auto oracle = bfs_neighborhood(g, t, layers, rev);
        std::set<NodeRef> got(b.input_nodes().begin(), b.input_nodes().end());
        EXPECT_EQ(got, oracle);
        EXPECT_EQ(got.size(), b.input_nodes().size());
        expect_well_formed(b);
      }
  }
}

TEST(SampleNeighbors, SourceBoundAndStructure) {
  HeteroGraph g = testing::random_graph(3, 40, 40, 0.2);
  SamplerConfig cfg;
  cfg.fanouts = {3};
  cfg.num_layers = 2;
  const std::vector<NodeRef> t = {{0, 1}, {0, 2}, {1, 5}};
  EgoBatch b = sample_neighbors(g, t, cfg, 4);
  expect_well_formed(b);
  const double r = static_cast<double>(b.relations.size());
  EXPECT_LE(static_cast<double>(b.input_nodes().size()), t.size() * std::pow(1 + r * 3, 2));
}

TEST(SampleNeighbors, Deterministic) {
  HeteroGraph g = testing::random_graph(5, 30, 30, 0.2);
  SamplerConfig cfg;
  cfg.fanouts = {2};
  const std::vector<NodeRef> t = {{0, 1}, {1, 2}};
  EgoBatch a = sample_neighbors(g, t, cfg, 77), b = sample_neighbors(g, t, cfg, 77);
  ASSERT_EQ(a.blocks.size(), b.blocks.size());
  for (std::size_t l = 0; l < a.blocks.size(); ++l) {
    EXPECT_EQ(a.blocks[l].sources, b.blocks[l].sources);
    for (std::size_t m = 0; m < a.blocks[l].edges.size(); ++m) {
      EXPECT_EQ(a.blocks[l].edges[m].src, b.blocks[l].edges[m].src);
      EXPECT_EQ(a.blocks[l].edges[m].dst, b.blocks[l].edges[m].dst);
    }
  }
}

TEST(SampleNeighbors, NoDuplicateNeighborsPerRelation) {
  HeteroGraph g = testing::random_graph(6, 30, 30, 0.3);
  SamplerConfig cfg;
  cfg.fanouts = {5};
  cfg.num_layers = 1;
  const std::vector<NodeRef> t = {{0, 0}, {0, 1}};
  EgoBatch b = sample_neighbors(g, t, cfg, 2);
  for (const auto& e : b.blocks[0].edges) {
    std::set<std::pair<std::int64_t, std::int64_t>> pairs;
    for (std::size_t k = 0; k < e.dst.size(); ++k) EXPECT_TRUE(pairs.insert({e.dst[k], e.src[k]}).second);
  }
}

TEST(SampleNeighbors, ExclusionHidesBothDirections) {
  HeteroGraph g({"a", "b"}, {1, 1}, {{0, "r", 1}}, {{{0, 0}}});
  EdgeExclusion ex;
  ex.add(0, {0, 0});
  ex.finalize();
  const std::vector<NodeRef> t = {{0, 0}, {1, 0}};
  EgoBatch b = sample_neighbors(g, t, SamplerConfig::saturating(1), 0, &ex);
  for (const auto& e : b.blocks[0].edges) EXPECT_TRUE(e.dst.empty());
  EgoBatch open = sample_neighbors(g, t, SamplerConfig::saturating(1), 0);
  std::size_t edges = 0;
  for (const auto& e : open.blocks[0].edges) edges += e.dst.size();
  EXPECT_EQ(edges, 2u);
}

TEST(SampleTargets, GlobalFullBatchIsPermutationOfTrain) {
  SyntheticSpec spec;
  spec.nodes_per_type = 40;
  spec.intra_probability = 0.2;
  spec.inter_probability = 0.01;
  HeteroGraph g = generate_synthetic(spec).graph;
  auto train = g.labeled_nodes(Split::kTrain);
  auto s = sample_target_nodes(g, train.size(), TargetMode::kGlobal, nullptr, 3);
  std::multiset<NodeRef> a(train.begin(), train.end()), b(s.nodes.begin(), s.nodes.end());
  EXPECT_EQ(a, b);
  EXPECT_FALSE(s.with_replacement);
}

TEST(SampleTargets, PartitionLocalRequiresMap) {
  HeteroGraph g = generate_synthetic(SyntheticSpec{}).graph;
  EXPECT_THROW(sample_target_nodes(g, 4, TargetMode::kPartitionLocal, nullptr, 0), ContractError);
}

TEST(SampleTargets, PartitionLocalSharesOneLeaf) {
  HeteroGraph g = generate_synthetic(SyntheticSpec{}).graph;
  PartitionMap pm = assign_partitions(g, 2, 1);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto s = sample_target_nodes(g, 16, TargetMode::kPartitionLocal, &pm, seed);
    for (const NodeRef& n : s.nodes) EXPECT_EQ(pm.leaf(g, n), s.leaf);
    auto e = sample_target_edges(g, 16, TargetMode::kPartitionLocal, &pm, seed);
    const auto& rel = g.relation(e.edges.front().relation);
    for (const auto& le : e.edges) EXPECT_EQ(pm.leaf(g, {rel.src_type, le.edge.src}), e.leaf);
  }
}

TEST(SampleTargets, SmallLeafFallsBackWithReplacement) {
  HeteroGraph g = generate_synthetic(SyntheticSpec{}).graph;
  PartitionMap pm = assign_partitions(g, 64, 1);
  auto s = sample_target_nodes(g, 200, TargetMode::kPartitionLocal, &pm, 0);
  EXPECT_TRUE(s.with_replacement);
  EXPECT_EQ(s.nodes.size(), 200u);
}

TEST(SampleTargets, PartitionLocalTouchesFewerNodes) {
  HeteroGraph g = generate_synthetic(SyntheticSpec{}).graph;
  PartitionMap pm = assign_partitions(g, 8, 0);
  SamplerConfig cfg;
  cfg.fanouts = {5};
  double local = 0, global = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto a = sample_target_nodes(g, 32, TargetMode::kPartitionLocal, &pm, seed);
    auto b = sample_target_nodes(g, 32, TargetMode::kGlobal, nullptr, seed);
    local += static_cast<double>(sample_neighbors(g, a.nodes, cfg, seed).unique_nodes());
    global += static_cast<double>(sample_neighbors(g, b.nodes, cfg, seed).unique_nodes());
  }
  EXPECT_LT(local / 20, global / 20);
}

}  // namespace
}  // namespace lmgnn
