#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lmgnn/graph.hpp"

namespace lmgnn {

struct Triplet {
  NodeRef head;
  std::int32_t relation = 0;
  NodeRef tail;
  bool operator==(const Triplet&) const = default;
};

/// Positives followed by their corruptions. Before filtering, triplet
/// n + i*k + j is the j-th negative of positive i.
struct TripletBatch {
  std::vector<Triplet> triplets;
  std::vector<std::int8_t> labels;  // +1 positive, -1 negative
  std::size_t positives_count = 0;
  std::size_t negatives_per_positive = 0;
  std::vector<NodeRef> distinct_endpoints;  // first-appearance order
  // Per negative (indexed from 0): which slot was replaced, and the index of
  // the positive it was built from.
  std::vector<std::uint8_t> corrupted_head;
  std::vector<std::size_t> negative_source;
  // Joint mode only: the shared corrupt-node pool.
  std::vector<NodeRef> pool;
  // Some negative could not differ from its positive (single-node pool/type).
  bool degenerate = false;
  // Negatives removed by filter_known_edges.
  std::size_t dropped = 0;

  std::size_t negatives_count() const { return triplets.size() - positives_count; }
};

// Each negative replaces head or tail (fair coin) with a node drawn uniformly
// among the other nodes of that slot's type.
TripletBatch corrupt_independent(std::span<const Triplet> positives, std::size_t k,
                                 const HeteroGraph& graph, std::uint64_t seed);

// Draws one pool of n = |positives| corrupt nodes, typed to the slots being
// corrupted, and builds every negative by pairing a surviving endpoint with a
// pool member. At most 3n distinct endpoints regardless of k.
TripletBatch corrupt_joint(std::span<const Triplet> positives, std::size_t k,
                           const HeteroGraph& graph, std::uint64_t seed);

// Negatives that are existing edges are re-corrupted (up to 10 tries) or
// dropped; `dropped` counts the latter.
TripletBatch filter_known_edges(const TripletBatch& batch, const HeteroGraph& graph,
                                std::uint64_t seed);

void rebuild_distinct_endpoints(TripletBatch& batch);

}  // namespace lmgnn
