#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "lmgnn/graph.hpp"

namespace lmgnn {

struct SamplerConfig {
  // One fanout per message relation, or a single value used for all of them.
  std::vector<std::int32_t> fanouts = {10};
  std::int32_t num_layers = 2;
  bool include_reverse = true;
  // When false every sampled neighbor occupies its own source slot, so the
  // batch is the unrolled sampling tree.
  bool dedup = true;

  std::int32_t fanout(std::size_t message_relation) const;
  // Fanout large enough to take every neighbor.
  static SamplerConfig saturating(std::int32_t num_layers, bool include_reverse = true);
};

// Edges hidden from message passing (e.g. the positive edges of the current
// link-prediction batch, or held-out evaluation edges).
class EdgeExclusion {
 public:
  EdgeExclusion() = default;
  void add(std::int32_t relation, const Edge& edge);
  void finalize();
  bool contains(std::int32_t relation, NodeId src, NodeId dst) const;
  bool empty() const { return count_ == 0; }

 private:
  std::vector<std::vector<Edge>> sorted_;
  std::size_t count_ = 0;
};

struct BlockEdges {
  std::vector<std::int64_t> dst;  // target position in the block
  std::vector<std::int64_t> src;  // source position in the block
};

/// One message-passing layer. sources[0, num_targets) are the layer's
/// targets, so each target's own representation is available to the self
/// term. The next (inner) block's sources are exactly this block's targets.
struct Block {
  std::vector<NodeRef> sources;
  std::size_t num_targets = 0;
  std::vector<BlockEdges> edges;  // per message relation
};

/// Layered sampled neighborhood of a set of target nodes.
/// blocks.front() consumes input features; blocks.back() produces the final
/// target representations.
struct EgoBatch {
  std::vector<Block> blocks;
  std::vector<NodeRef> targets;
  std::vector<MessageRelation> relations;

  std::size_t num_layers() const { return blocks.size(); }
  const std::vector<NodeRef>& input_nodes() const { return blocks.front().sources; }
  // Distinct graph nodes touched by the batch.
  std::size_t unique_nodes() const;
};

// Uniform sampling without replacement per (node, message relation), drawn
// once per node and reused by every layer that expands that node. In dedup
// mode, repeated targets are collapsed (first occurrence wins).
EgoBatch sample_neighbors(const HeteroGraph& graph, std::span<const NodeRef> targets,
                          const SamplerConfig& config, std::uint64_t seed,
                          const EdgeExclusion* exclude = nullptr);

// Two-level hierarchy: leaves grouped pairwise into level-1 groups.
struct PartitionMap {
  std::int32_t num_leaves = 0;
  std::int32_t num_groups = 0;
  std::vector<std::int32_t> leaf_of_node;  // indexed by global node id
  std::vector<std::int32_t> group_of_leaf;

  std::int32_t leaf(const HeteroGraph& graph, const NodeRef& n) const {
    return leaf_of_node[static_cast<std::size_t>(graph.global_id(n))];
  }
  std::vector<std::size_t> leaf_sizes() const;
};

// Balanced leaves grown greedily from random seeds, always absorbing the
// frontier node with the most edges into the growing leaf.
PartitionMap assign_partitions(const HeteroGraph& graph, std::int32_t leaf_count,
                               std::uint64_t seed);

enum class TargetMode { kGlobal, kPartitionLocal };

struct TargetSample {
  std::vector<NodeRef> nodes;       // node tasks
  std::vector<LabeledEdge> edges;   // edge / link tasks
  std::int32_t leaf = -1;           // chosen leaf in partition-local mode
  bool with_replacement = false;    // leaf held fewer entities than the batch
};

// Samples train-split labeled nodes.
TargetSample sample_target_nodes(const HeteroGraph& graph, std::size_t batch_size,
                                 TargetMode mode, const PartitionMap* partitions,
                                 std::uint64_t seed);
// Samples train-split labeled edges; an edge belongs to its source's leaf.
TargetSample sample_target_edges(const HeteroGraph& graph, std::size_t batch_size,
                                 TargetMode mode, const PartitionMap* partitions,
                                 std::uint64_t seed);

}  // namespace lmgnn
