#pragma once

#include <cstdint>
#include <functional>
#include <list>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "lmgnn/graph.hpp"
#include "lmgnn/tensor.hpp"

namespace lmgnn {

struct CacheStats {
  std::size_t hits = 0;
  std::size_t misses = 0;
  std::size_t evictions = 0;
  double hit_rate() const {
    const auto total = hits + misses;
    return total ? static_cast<double>(hits) / static_cast<double>(total) : 0.0;
  }
};

/// LRU store of text embeddings stamped with the optimizer step that
/// produced them. An entry is fresh while step - stamp <= staleness_limit.
class EmbeddingCache {
 public:
  EmbeddingCache(std::size_t capacity = 0, std::int64_t staleness_limit = 0);

  // Fresh entry (counted as a hit) or nullopt (counted as a miss). Stale
  // entries are dropped on lookup.
  std::optional<std::span<const double>> lookup(const NodeRef& node, std::int64_t step);
  void put(const NodeRef& node, std::span<const double> embedding, std::int64_t step);

  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::int64_t staleness_limit() const { return staleness_limit_; }
  const CacheStats& stats() const { return stats_; }
  void reset_stats() { stats_ = {}; }
  void clear();

 private:
  struct Entry {
    NodeRef node;
    std::vector<double> embedding;
    std::int64_t stamp = 0;
  };
  std::size_t capacity_;
  std::int64_t staleness_limit_;
  std::list<Entry> entries_;  // most recently used first
  std::unordered_map<NodeRef, std::list<Entry>::iterator, NodeRefHash> index_;
  CacheStats stats_;
};

using EncodeFn = std::function<Tensor(std::span<const NodeRef>)>;

// Rows for `nodes` taken from fresh cache entries where possible; the misses
// are encoded with `encode` (gradient-free) and inserted. Returns a detached
// [nodes x F] tensor.
Tensor cache_get_or_encode(EmbeddingCache& cache, std::span<const NodeRef> nodes,
                           std::int64_t step, const EncodeFn& encode);

}  // namespace lmgnn
