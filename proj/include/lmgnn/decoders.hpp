#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>

#include "lmgnn/tensor.hpp"

namespace lmgnn {

/// Diagonal bilinear scorer: c(h, r, t) = sum_i h_i r_i t_i.
class DistMult {
 public:
  DistMult() = default;
  DistMult(std::size_t num_relations, std::size_t dim, std::mt19937_64& rng);
  // Wraps an existing [R x D] relation table.
  explicit DistMult(Tensor relations);

  std::size_t num_relations() const { return relations_.rows(); }
  std::size_t dim() const { return relations_.cols(); }
  const Tensor& relations() const { return relations_; }

  // heads, tails: [B x D] -> scores [B].
  Tensor score(const Tensor& heads, std::span<const std::int32_t> relations,
               const Tensor& tails) const;

  ParamList params(const std::string& prefix) const { return {{prefix + "relations", relations_}}; }

 private:
  Tensor relations_;
};

// Single-triplet scalar score.
double distmult_score(std::span<const double> head, std::span<const double> relation,
                      std::span<const double> tail);

// mean_i softplus(-y_i * score_i).
Tensor link_loss(std::span<const std::int8_t> labels, const Tensor& scores);

/// Linear classifier over node embeddings.
class NodeClassifierHead {
 public:
  NodeClassifierHead() = default;
  NodeClassifierHead(std::size_t dim, std::size_t classes, bool bias, std::mt19937_64& rng);
  NodeClassifierHead(Tensor weight, Tensor bias);  // bias may be undefined

  Tensor logits(const Tensor& embeddings) const;
  std::size_t classes() const { return weight_.cols(); }
  ParamList params(const std::string& prefix) const;

 private:
  Tensor weight_, bias_;
};

/// Linear classifier over the concatenation of both endpoint embeddings.
class EdgeClassifierHead {
 public:
  EdgeClassifierHead() = default;
  EdgeClassifierHead(std::size_t dim, std::size_t classes, bool bias, std::mt19937_64& rng);
  EdgeClassifierHead(Tensor weight, Tensor bias);  // weight is [2D x classes]

  Tensor logits(const Tensor& h_head, const Tensor& h_tail) const;
  std::size_t classes() const { return weight_.cols(); }
  ParamList params(const std::string& prefix) const;

 private:
  Tensor weight_, bias_;
};

Tensor node_loss(const NodeClassifierHead& head, const Tensor& embeddings,
                 std::span<const std::int64_t> labels);
Tensor edge_loss(const EdgeClassifierHead& head, const Tensor& h_head, const Tensor& h_tail,
                 std::span<const std::int64_t> labels);

}  // namespace lmgnn
