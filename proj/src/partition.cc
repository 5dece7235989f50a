#include <queue>
#include <random>
#include <tuple>

#include "lmgnn/errors.hpp"
#include "lmgnn/sampling.hpp"

namespace lmgnn {
namespace {

// Undirected adjacency over global ids, all relations merged.
Csr undirected_adjacency(const HeteroGraph& graph) {
  const auto n = static_cast<std::size_t>(graph.total_nodes());
  Csr csr;
  csr.offsets.assign(n + 1, 0);
  for (std::int32_t r = 0; r < graph.num_relations(); ++r) {
    const auto& rel = graph.relation(r);
    for (const auto& e : graph.edges(r)) {
      ++csr.offsets[static_cast<std::size_t>(graph.global_id({rel.src_type, e.src})) + 1];
      ++csr.offsets[static_cast<std::size_t>(graph.global_id({rel.dst_type, e.dst})) + 1];
    }
  }
  for (std::size_t i = 1; i <= n; ++i) csr.offsets[i] += csr.offsets[i - 1];
  csr.indices.resize(static_cast<std::size_t>(csr.offsets[n]));
  std::vector<NodeId> fill(csr.offsets.begin(), csr.offsets.end() - 1);
  for (std::int32_t r = 0; r < graph.num_relations(); ++r) {
    const auto& rel = graph.relation(r);
    for (const auto& e : graph.edges(r)) {
      const auto u = graph.global_id({rel.src_type, e.src});
      const auto v = graph.global_id({rel.dst_type, e.dst});
      csr.indices[static_cast<std::size_t>(fill[static_cast<std::size_t>(u)]++)] = v;
      csr.indices[static_cast<std::size_t>(fill[static_cast<std::size_t>(v)]++)] = u;
    }
  }
  return csr;
}

}  // namespace

PartitionMap assign_partitions(const HeteroGraph& graph, std::int32_t leaf_count,
                               std::uint64_t seed) {
  const NodeId n = graph.total_nodes();
  LMGNN_CHECK(leaf_count >= 2 && leaf_count <= n, ContractError,
              "leaf_count " << leaf_count << " outside [2, " << n << "]");
  const Csr adj = undirected_adjacency(graph);
  std::mt19937_64 rng(seed);
  // Random tie-break keys keep growth from favouring low ids.
  std::vector<std::uint64_t> tie(static_cast<std::size_t>(n));
  for (auto& t : tie) t = rng();

  PartitionMap map;
  map.num_leaves = leaf_count;
  map.leaf_of_node.assign(static_cast<std::size_t>(n), -1);
  std::vector<std::int64_t> conn(static_cast<std::size_t>(n), 0);
  std::vector<NodeId> unassigned(static_cast<std::size_t>(n));
  for (NodeId i = 0; i < n; ++i) unassigned[static_cast<std::size_t>(i)] = i;

  using Entry = std::tuple<std::int64_t, std::uint64_t, NodeId>;  // (conn, tie, node)
  for (std::int32_t leaf = 0; leaf < leaf_count; ++leaf) {
    const NodeId target = n / leaf_count + (leaf < n % leaf_count ? 1 : 0);
    std::priority_queue<Entry> frontier;
    std::vector<NodeId> touched;
    NodeId size = 0;
    while (size < target) {
      NodeId next = -1;
      while (!frontier.empty()) {
        auto [c, t, v] = frontier.top();
        frontier.pop();
        if (map.leaf_of_node[static_cast<std::size_t>(v)] < 0 &&
            c == conn[static_cast<std::size_t>(v)]) {
          next = v;
          break;
        }
      }
      if (next < 0) {
        // Frontier exhausted: restart from a random unassigned seed.
        std::erase_if(unassigned, [&](NodeId v) { return map.leaf_of_node[static_cast<std::size_t>(v)] >= 0; });
        std::uniform_int_distribution<std::size_t> d(0, unassigned.size() - 1);
        next = unassigned[d(rng)];
      }
      map.leaf_of_node[static_cast<std::size_t>(next)] = leaf;
      ++size;
      for (NodeId v : adj.row(next)) {
        if (map.leaf_of_node[static_cast<std::size_t>(v)] >= 0) continue;
        if (conn[static_cast<std::size_t>(v)] == 0) touched.push_back(v);
        ++conn[static_cast<std::size_t>(v)];
        frontier.emplace(conn[static_cast<std::size_t>(v)], tie[static_cast<std::size_t>(v)], v);
      }
    }
    for (NodeId v : touched) conn[static_cast<std::size_t>(v)] = 0;
  }

  map.num_groups = (leaf_count + 1) / 2;
  map.group_of_leaf.resize(static_cast<std::size_t>(leaf_count));
  for (std::int32_t l = 0; l < leaf_count; ++l) map.group_of_leaf[static_cast<std::size_t>(l)] = l / 2;
  return map;
}

}  // namespace lmgnn
