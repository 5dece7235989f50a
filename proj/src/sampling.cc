#include <algorithm>
#include <limits>
#include <random>
#include <unordered_map>
#include <unordered_set>

#include "lmgnn/errors.hpp"
#include "lmgnn/sampling.hpp"

namespace lmgnn {

std::int32_t SamplerConfig::fanout(std::size_t message_relation) const {
  if (fanouts.size() == 1) return fanouts.front();
  return fanouts.at(message_relation);
}

SamplerConfig SamplerConfig::saturating(std::int32_t num_layers, bool include_reverse) {
  SamplerConfig config;
  config.fanouts = {std::numeric_limits<std::int32_t>::max()};
  config.num_layers = num_layers;
  config.include_reverse = include_reverse;
  return config;
}

void EdgeExclusion::add(std::int32_t relation, const Edge& edge) {
  if (sorted_.size() <= static_cast<std::size_t>(relation))
    sorted_.resize(static_cast<std::size_t>(relation) + 1);
  sorted_[static_cast<std::size_t>(relation)].push_back(edge);
  ++count_;
}

void EdgeExclusion::finalize() {
  for (auto& list : sorted_) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }
}

bool EdgeExclusion::contains(std::int32_t relation, NodeId src, NodeId dst) const {
  if (static_cast<std::size_t>(relation) >= sorted_.size()) return false;
  const auto& list = sorted_[static_cast<std::size_t>(relation)];
  return std::binary_search(list.begin(), list.end(), Edge{src, dst});
}

std::size_t EgoBatch::unique_nodes() const {
  if (blocks.empty()) return 0;
  std::unordered_set<NodeRef, NodeRefHash> seen(input_nodes().begin(), input_nodes().end());
  return seen.size();
}

EgoBatch sample_neighbors(const HeteroGraph& graph, std::span<const NodeRef> targets,
                          const SamplerConfig& config, std::uint64_t seed,
                          const EdgeExclusion* exclude) {
  LMGNN_CHECK(!targets.empty(), ContractError, "sample_neighbors: empty target list");
  LMGNN_CHECK(config.num_layers >= 1, ContractError,
              "sample_neighbors: num_layers must be >= 1, got " << config.num_layers);
  EgoBatch batch;
  batch.relations = graph.message_relations(config.include_reverse);
  const std::size_t num_rel = batch.relations.size();
  LMGNN_CHECK(config.fanouts.size() == 1 || config.fanouts.size() == num_rel, ContractError,
              "sample_neighbors: " << config.fanouts.size() << " fanouts for " << num_rel
                                   << " message relations");
  for (auto f : config.fanouts)
    LMGNN_CHECK(f >= 1, ContractError, "sample_neighbors: fanout must be >= 1, got " << f);
  if (exclude != nullptr && exclude->empty()) exclude = nullptr;

  std::mt19937_64 rng(seed);
  // Slot list shared by all blocks: each outer block extends the inner one.
  std::vector<NodeRef> slots;
  std::unordered_map<NodeRef, std::int64_t, NodeRefHash> slot_of;
  // children[slot][relation] = sampled neighbor slots, once expanded.
  std::vector<std::vector<std::vector<std::int64_t>>> children;

  auto new_slot = [&](const NodeRef& n) -> std::int64_t {
    if (config.dedup) {
      auto [it, inserted] = slot_of.emplace(n, static_cast<std::int64_t>(slots.size()));
      if (!inserted) return it->second;
    }
    slots.push_back(n);
    children.emplace_back();
    return static_cast<std::int64_t>(slots.size()) - 1;
  };

  for (const auto& t : targets) {
    LMGNN_CHECK(graph.contains(t), IndexError,
                "target node " << t.type << ":" << t.local << " not in graph");
    new_slot(t);
  }
  batch.targets = slots;

  std::vector<NodeId> candidates;
  auto expand = [&](std::size_t slot) {
    const NodeRef node = slots[slot];
    std::vector<std::vector<std::int64_t>> sampled(num_rel);
    for (std::size_t m = 0; m < num_rel; ++m) {
      const auto& rel = batch.relations[m];
      if (rel.target_type != node.type) continue;
      auto nbrs = graph.neighbors(rel, node.local);
      candidates.assign(nbrs.begin(), nbrs.end());
      if (exclude) {
        std::erase_if(candidates, [&](NodeId u) {
          return rel.reversed ? exclude->contains(rel.relation, node.local, u)
                              : exclude->contains(rel.relation, u, node.local);
        });
      }
      const auto f = static_cast<std::size_t>(config.fanout(m));
      if (candidates.size() > f) {
        // Partial Fisher-Yates: first f entries become a uniform subset.
        for (std::size_t i = 0; i < f; ++i) {
          std::uniform_int_distribution<std::size_t> pick(i, candidates.size() - 1);
          std::swap(candidates[i], candidates[pick(rng)]);
        }
        candidates.resize(f);
      }
      for (NodeId u : candidates) sampled[m].push_back(new_slot({rel.neighbor_type, u}));
    }
    children[slot] = std::move(sampled);
  };

  std::vector<Block> inner_to_outer;
  for (std::int32_t layer = 0; layer < config.num_layers; ++layer) {
    Block block;
    block.num_targets = slots.size();
    block.edges.resize(num_rel);
    for (std::size_t s = 0; s < block.num_targets; ++s) {
      if (children[s].empty()) expand(s);
      for (std::size_t m = 0; m < num_rel; ++m)
        for (auto child : children[s][m]) {
          block.edges[m].dst.push_back(static_cast<std::int64_t>(s));
          block.edges[m].src.push_back(child);
        }
    }
    block.sources = slots;
    inner_to_outer.push_back(std::move(block));
  }
  batch.blocks.assign(std::make_move_iterator(inner_to_outer.rbegin()),
                      std::make_move_iterator(inner_to_outer.rend()));
  return batch;
}

std::vector<std::size_t> PartitionMap::leaf_sizes() const {
  std::vector<std::size_t> sizes(static_cast<std::size_t>(num_leaves), 0);
  for (auto l : leaf_of_node) ++sizes[static_cast<std::size_t>(l)];
  return sizes;
}

namespace {

TargetSample pick(std::size_t pool_size, std::size_t batch_size, std::mt19937_64& rng,
                  std::vector<std::size_t>& chosen) {
  TargetSample out;
  chosen.clear();
  if (pool_size == 0) return out;
  if (pool_size >= batch_size) {
    std::vector<std::size_t> order(pool_size);
    for (std::size_t i = 0; i < pool_size; ++i) order[i] = i;
    for (std::size_t i = 0; i < batch_size; ++i) {
      std::uniform_int_distribution<std::size_t> d(i, pool_size - 1);
      std::swap(order[i], order[d(rng)]);
    }
    chosen.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(batch_size));
  } else {
    out.with_replacement = true;
    std::uniform_int_distribution<std::size_t> d(0, pool_size - 1);
    for (std::size_t i = 0; i < batch_size; ++i) chosen.push_back(d(rng));
  }
  return out;
}

template <typename Item, typename LeafOf>
TargetSample sample_items(const std::vector<Item>& pool, std::size_t batch_size, TargetMode mode,
                          const PartitionMap* partitions, std::uint64_t seed, LeafOf leaf_of,
                          std::vector<Item>& out_items) {
  LMGNN_CHECK(batch_size >= 1, ContractError, "target batch size must be >= 1");
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> chosen;
  TargetSample out;
  if (mode == TargetMode::kGlobal) {
    out = pick(pool.size(), batch_size, rng, chosen);
    for (auto i : chosen) out_items.push_back(pool[i]);
    return out;
  }
  LMGNN_CHECK(partitions != nullptr, ContractError,
              "partition-local target sampling requires a PartitionMap");
  // Leaves without any train entity cannot serve a batch.
  std::vector<std::vector<Item>> by_leaf(static_cast<std::size_t>(partitions->num_leaves));
  for (const auto& item : pool) by_leaf[static_cast<std::size_t>(leaf_of(item))].push_back(item);
  std::vector<std::int32_t> usable;
  for (std::size_t l = 0; l < by_leaf.size(); ++l)
    if (!by_leaf[l].empty()) usable.push_back(static_cast<std::int32_t>(l));
  LMGNN_CHECK(!usable.empty(), ContractError, "no leaf holds a train entity");
  std::uniform_int_distribution<std::size_t> leaf_dist(0, usable.size() - 1);
  const std::int32_t leaf = usable[leaf_dist(rng)];
  const auto& local = by_leaf[static_cast<std::size_t>(leaf)];
  out = pick(local.size(), batch_size, rng, chosen);
  out.leaf = leaf;
  for (auto i : chosen) out_items.push_back(local[i]);
  return out;
}

}  // namespace

TargetSample sample_target_nodes(const HeteroGraph& graph, std::size_t batch_size,
                                 TargetMode mode, const PartitionMap* partitions,
                                 std::uint64_t seed) {
  const auto pool = graph.labeled_nodes(Split::kTrain);
  std::vector<NodeRef> items;
  auto out = sample_items(pool, batch_size, mode, partitions, seed,
                          [&](const NodeRef& n) { return partitions->leaf(graph, n); }, items);
  out.nodes = std::move(items);
  return out;
}

TargetSample sample_target_edges(const HeteroGraph& graph, std::size_t batch_size,
                                 TargetMode mode, const PartitionMap* partitions,
                                 std::uint64_t seed) {
  const auto pool = graph.labeled_edges(Split::kTrain);
  std::vector<LabeledEdge> items;
  auto out = sample_items(pool, batch_size, mode, partitions, seed,
                          [&](const LabeledEdge& e) {
                            const auto src_type = graph.relation(e.relation).src_type;
                            return partitions->leaf(graph, {src_type, e.edge.src});
                          },
                          items);
  out.edges = std::move(items);
  return out;
}

}  // namespace lmgnn
