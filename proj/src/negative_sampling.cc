#include <algorithm>
#include <map>
#include <random>
#include <unordered_set>

#include "lmgnn/errors.hpp"
#include "lmgnn/negative_sampling.hpp"

namespace lmgnn {
namespace {

void check_inputs(std::span<const Triplet> positives, std::size_t k, const HeteroGraph& graph) {
  LMGNN_CHECK(k >= 1, ContractError, "negatives per positive must be >= 1");
  LMGNN_CHECK(!positives.empty(), ContractError, "no positive triplets");
  for (const auto& p : positives) {
    LMGNN_CHECK(p.relation >= 0 && p.relation < graph.num_relations(), IndexError,
                "relation " << p.relation << " out of range");
    LMGNN_CHECK(graph.contains(p.head) && graph.contains(p.tail), IndexError,
                "positive triplet endpoint outside the graph");
  }
}

TripletBatch start_batch(std::span<const Triplet> positives, std::size_t k) {
  TripletBatch batch;
  batch.positives_count = positives.size();
  batch.negatives_per_positive = k;
  batch.triplets.assign(positives.begin(), positives.end());
  batch.labels.assign(positives.size(), 1);
  batch.triplets.reserve(positives.size() * (k + 1));
  return batch;
}

void push_negative(TripletBatch& batch, std::size_t source, bool head, const NodeRef& node) {
  Triplet neg = batch.triplets[source];
  (head ? neg.head : neg.tail) = node;
  batch.triplets.push_back(neg);
  batch.labels.push_back(-1);
  batch.corrupted_head.push_back(head ? 1 : 0);
  batch.negative_source.push_back(source);
}

// Uniform over the nodes of `type` other than `avoid` when possible.
NodeRef draw_other(const HeteroGraph& graph, std::int32_t type, NodeId avoid,
                   std::mt19937_64& rng, bool& degenerate) {
  const NodeId count = graph.node_count(type);
  if (count <= 1) {
    degenerate = true;
    return {type, 0};
  }
  std::uniform_int_distribution<NodeId> d(0, count - 2);
  NodeId v = d(rng);
  if (v >= avoid) ++v;
  return {type, v};
}

}  // namespace

void rebuild_distinct_endpoints(TripletBatch& batch) {
  std::unordered_set<NodeRef, NodeRefHash> seen;
  batch.distinct_endpoints.clear();
  for (const auto& t : batch.triplets)
    for (const NodeRef& n : {t.head, t.tail})
      if (seen.insert(n).second) batch.distinct_endpoints.push_back(n);
}

TripletBatch corrupt_independent(std::span<const Triplet> positives, std::size_t k,
                                 const HeteroGraph& graph, std::uint64_t seed) {
  check_inputs(positives, k, graph);
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(0.5);
  TripletBatch batch = start_batch(positives, k);
  for (std::size_t i = 0; i < positives.size(); ++i) {
    const auto& p = positives[i];
    for (std::size_t j = 0; j < k; ++j) {
      const bool head = coin(rng);
      const NodeRef& original = head ? p.head : p.tail;
      push_negative(batch, i, head,
                    draw_other(graph, original.type, original.local, rng, batch.degenerate));
    }
  }
  rebuild_distinct_endpoints(batch);
  return batch;
}

TripletBatch corrupt_joint(std::span<const Triplet> positives, std::size_t k,
                           const HeteroGraph& graph, std::uint64_t seed) {
  check_inputs(positives, k, graph);
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(0.5);
  const std::size_t n = positives.size();

  // Pool members per node type, allocated by how often that type fills a
  // positive slot (largest-remainder rounding of n across types).
  std::map<std::int32_t, std::size_t> demand;
  for (const auto& p : positives) {
    ++demand[p.head.type];
    ++demand[p.tail.type];
  }
  std::map<std::int32_t, std::size_t> share;
  std::vector<std::pair<std::size_t, std::int32_t>> remainders;
  std::size_t allotted = 0;
  for (auto [type, count] : demand) {
    share[type] = count * n / (2 * n);
    allotted += share[type];
    remainders.emplace_back(count * n % (2 * n), type);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; allotted < n; ++i, ++allotted) ++share[remainders[i % remainders.size()].second];

  TripletBatch batch = start_batch(positives, k);
  std::map<std::int32_t, std::vector<NodeRef>> sub_pool;
  for (auto [type, count] : share) {
    std::uniform_int_distribution<NodeId> d(0, graph.node_count(type) - 1);
    for (std::size_t i = 0; i < count; ++i) {
      const NodeRef node{type, d(rng)};
      sub_pool[type].push_back(node);
      batch.pool.push_back(node);
    }
  }

  for (std::size_t pi = 0; pi < n; ++pi) {
    const auto& p = positives[pi];
    for (std::size_t j = 0; j < k; ++j) {
      bool head = coin(rng);
      auto members = [&](bool h) -> const std::vector<NodeRef>* {
        auto it = sub_pool.find(h ? p.head.type : p.tail.type);
        return (it == sub_pool.end() || it->second.empty()) ? nullptr : &it->second;
      };
      const std::vector<NodeRef>* pool = members(head);
      if (pool == nullptr) {
        head = !head;
        pool = members(head);
      }
      LMGNN_CHECK(pool != nullptr, ContractError,
                  "joint negative sampling: empty sub-pool for relation " << p.relation);
      const NodeRef& original = head ? p.head : p.tail;
      // Uniform over pool members that differ from the replaced endpoint.
      std::vector<std::size_t> usable;
      for (std::size_t i = 0; i < pool->size(); ++i)
        if ((*pool)[i] != original) usable.push_back(i);
      NodeRef chosen = original;
      if (usable.empty()) {
        batch.degenerate = true;
      } else {
        std::uniform_int_distribution<std::size_t> d(0, usable.size() - 1);
        chosen = (*pool)[usable[d(rng)]];
      }
      push_negative(batch, pi, head, chosen);
    }
  }
  rebuild_distinct_endpoints(batch);
  return batch;
}

TripletBatch filter_known_edges(const TripletBatch& batch, const HeteroGraph& graph,
                                std::uint64_t seed) {
  constexpr int kRetries = 10;
  std::mt19937_64 rng(seed);
  TripletBatch out;
  out.positives_count = batch.positives_count;
  out.negatives_per_positive = batch.negatives_per_positive;
  out.pool = batch.pool;
  out.degenerate = batch.degenerate;
  out.dropped = batch.dropped;
  out.triplets.assign(batch.triplets.begin(),
                      batch.triplets.begin() + static_cast<std::ptrdiff_t>(batch.positives_count));
  out.labels.assign(out.triplets.size(), 1);
  auto is_edge = [&](const Triplet& t) {
    return graph.has_edge(t.relation, t.head.local, t.tail.local);
  };
  for (std::size_t i = 0; i < batch.negatives_count(); ++i) {
    Triplet neg = batch.triplets[batch.positives_count + i];
    const bool head = batch.corrupted_head[i] != 0;
    const std::size_t source = batch.negative_source[i];
    const Triplet& positive = batch.triplets[source];
    bool ok = !is_edge(neg);
    for (int attempt = 0; !ok && attempt < kRetries; ++attempt) {
      const NodeRef& original = head ? positive.head : positive.tail;
      bool degenerate = false;
      (head ? neg.head : neg.tail) =
          draw_other(graph, original.type, original.local, rng, degenerate);
      ok = !is_edge(neg);
    }
    if (!ok) {
      ++out.dropped;
      continue;
    }
    out.triplets.push_back(neg);
    out.labels.push_back(-1);
    out.corrupted_head.push_back(head ? 1 : 0);
    out.negative_source.push_back(source);
  }
  rebuild_distinct_endpoints(out);
  return out;
}

}  // namespace lmgnn
