#include <algorithm>

#include "lmgnn/cache.hpp"
#include "lmgnn/errors.hpp"

namespace lmgnn {

EmbeddingCache::EmbeddingCache(std::size_t capacity, std::int64_t staleness_limit)
    : capacity_(capacity), staleness_limit_(staleness_limit) {
  LMGNN_CHECK(staleness_limit >= 0, ContractError, "staleness limit must be >= 0");
}

std::optional<std::span<const double>> EmbeddingCache::lookup(const NodeRef& node,
                                                              std::int64_t step) {
  auto it = index_.find(node);
  if (it == index_.end()) {
    ++stats_.misses;
    return std::nullopt;
  }
  if (step - it->second->stamp > staleness_limit_) {
    entries_.erase(it->second);
    index_.erase(it);
    ++stats_.misses;
    return std::nullopt;
  }
  entries_.splice(entries_.begin(), entries_, it->second);
  ++stats_.hits;
  return std::span<const double>(entries_.front().embedding);
}

void EmbeddingCache::put(const NodeRef& node, std::span<const double> embedding,
                         std::int64_t step) {
  if (capacity_ == 0) return;
  auto it = index_.find(node);
  if (it != index_.end()) {
    it->second->embedding.assign(embedding.begin(), embedding.end());
    it->second->stamp = step;
    entries_.splice(entries_.begin(), entries_, it->second);
    return;
  }
  if (entries_.size() == capacity_) {
    index_.erase(entries_.back().node);
    entries_.pop_back();
    ++stats_.evictions;
  }
  entries_.push_front({node, {embedding.begin(), embedding.end()}, step});
  index_.emplace(node, entries_.begin());
}

void EmbeddingCache::clear() {
  entries_.clear();
  index_.clear();
}

Tensor cache_get_or_encode(EmbeddingCache& cache, std::span<const NodeRef> nodes,
                           std::int64_t step, const EncodeFn& encode) {
  std::vector<std::vector<double>> rows(nodes.size());
  std::vector<NodeRef> missing;
  std::vector<std::size_t> missing_at;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (auto hit = cache.lookup(nodes[i], step)) {
      rows[i].assign(hit->begin(), hit->end());
    } else {
      missing.push_back(nodes[i]);
      missing_at.push_back(i);
    }
  }
  std::size_t dim = rows.empty() || rows[0].empty() ? 0 : rows[0].size();
  if (!missing.empty()) {
    Tensor fresh;
    {
      NoGradScope no_grad;
      fresh = encode(missing);
    }
    LMGNN_CHECK(fresh.rank() == 2 && fresh.rows() == missing.size(), ShapeError,
                "encoder returned " << shape_str(fresh.shape()) << " for " << missing.size()
                                    << " nodes");
    dim = fresh.cols();
    for (std::size_t j = 0; j < missing.size(); ++j) {
      std::span<const double> row = fresh.data().subspan(j * dim, dim);
      rows[missing_at[j]].assign(row.begin(), row.end());
      cache.put(missing[j], row, step);
    }
  }
  for (const auto& r : rows)
    if (!r.empty()) dim = r.size();
  std::vector<double> flat;
  flat.reserve(nodes.size() * dim);
  for (const auto& r : rows) {
    LMGNN_CHECK(r.size() == dim, ShapeError, "cached embedding width mismatch");
    flat.insert(flat.end(), r.begin(), r.end());
  }
  return Tensor::from({nodes.size(), dim}, std::move(flat));
}

}  // namespace lmgnn
