#include <cmath>
#include <numeric>

#include "lmgnn/decoders.hpp"
#include "lmgnn/errors.hpp"
#include "lmgnn/ops.hpp"

namespace lmgnn {
namespace {

Tensor classifier_weight(std::size_t in, std::size_t out, std::mt19937_64& rng) {
  return Tensor::randn({in, out}, 1.0 / std::sqrt(static_cast<double>(in)), rng, true);
}

Tensor apply(const Tensor& x, const Tensor& w, const Tensor& b) {
  LMGNN_CHECK(x.rank() == 2 && x.cols() == w.rows(), ShapeError,
              "classifier expects input width " << w.rows() << ", got " << shape_str(x.shape()));
  Tensor y = matmul(x, w);
  return b.defined() ? add_bias(y, b) : y;
}

ParamList head_params(const std::string& prefix, const Tensor& w, const Tensor& b) {
  ParamList out{{prefix + "weight", w}};
  if (b.defined()) out.push_back({prefix + "bias", b});
  return out;
}

}  // namespace

DistMult::DistMult(std::size_t num_relations, std::size_t dim, std::mt19937_64& rng) {
  // Near-uniform diagonal scaled so a score starts as a normalized dot product.
  relations_ = Tensor::randn({num_relations, dim}, 0.1, rng, true);
  const double s = 1.0 / std::sqrt(static_cast<double>(dim));
  for (auto& x : relations_.mutable_data()) x = (x + 1.0) * s;
}

DistMult::DistMult(Tensor relations) : relations_(std::move(relations)) {
  LMGNN_CHECK(relations_.rank() == 2, ShapeError, "DistMult relations must be [R x D]");
}

Tensor DistMult::score(const Tensor& heads, std::span<const std::int32_t> relations,
                       const Tensor& tails) const {
  LMGNN_CHECK(heads.rank() == 2 && heads.shape() == tails.shape() && heads.cols() == dim() &&
                  heads.rows() == relations.size(),
              ShapeError, "distmult: heads " << shape_str(heads.shape()) << ", tails "
                                             << shape_str(tails.shape()) << ", " << relations.size()
                                             << " relations, dim " << dim());
  std::vector<std::int64_t> rel(relations.begin(), relations.end());
  for (auto r : rel)
    LMGNN_CHECK(r >= 0 && static_cast<std::size_t>(r) < num_relations(), IndexError,
                "relation " << r << " out of range [0, " << num_relations() << ")");
  return row_sum(mul(mul(heads, gather_rows(relations_, rel)), tails));
}

double distmult_score(std::span<const double> head, std::span<const double> relation,
                      std::span<const double> tail) {
  LMGNN_CHECK(head.size() == relation.size() && tail.size() == relation.size(), ShapeError,
              "distmult: dimensions disagree");
  double s = 0.0;
  for (std::size_t i = 0; i < head.size(); ++i) s += head[i] * relation[i] * tail[i];
  return s;
}

Tensor link_loss(std::span<const std::int8_t> labels, const Tensor& scores) {
  LMGNN_CHECK(scores.numel() == labels.size() && !labels.empty(), ContractError,
              "link_loss: " << labels.size() << " labels for " << scores.numel() << " scores");
  std::vector<double> neg_y(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    LMGNN_CHECK(labels[i] == 1 || labels[i] == -1, ContractError,
                "link_loss: label " << int(labels[i]) << " is not +1 or -1");
    neg_y[i] = -static_cast<double>(labels[i]);
  }
  return mean(softplus(mul(scores, Tensor::from(scores.shape(), std::move(neg_y)))));
}

NodeClassifierHead::NodeClassifierHead(std::size_t dim, std::size_t classes, bool bias,
                                       std::mt19937_64& rng)
    : weight_(classifier_weight(dim, classes, rng)),
      bias_(bias ? Tensor::zeros({classes}, true) : Tensor()) {}

NodeClassifierHead::NodeClassifierHead(Tensor weight, Tensor bias)
    : weight_(std::move(weight)), bias_(std::move(bias)) {}

Tensor NodeClassifierHead::logits(const Tensor& embeddings) const {
  return apply(embeddings, weight_, bias_);
}

ParamList NodeClassifierHead::params(const std::string& prefix) const {
  return head_params(prefix, weight_, bias_);
}

EdgeClassifierHead::EdgeClassifierHead(std::size_t dim, std::size_t classes, bool bias,
                                       std::mt19937_64& rng)
    : weight_(classifier_weight(2 * dim, classes, rng)),
      bias_(bias ? Tensor::zeros({classes}, true) : Tensor()) {}

EdgeClassifierHead::EdgeClassifierHead(Tensor weight, Tensor bias)
    : weight_(std::move(weight)), bias_(std::move(bias)) {}

Tensor EdgeClassifierHead::logits(const Tensor& h_head, const Tensor& h_tail) const {
  LMGNN_CHECK(h_head.rank() == 2 && h_head.shape() == h_tail.shape() &&
                  2 * h_head.cols() == weight_.rows(),
              ShapeError, "edge head expects two [B x " << weight_.rows() / 2 << "] inputs, got "
                                                        << shape_str(h_head.shape()) << " and "
                                                        << shape_str(h_tail.shape()));
  return apply(concat_cols(h_head, h_tail), weight_, bias_);
}

ParamList EdgeClassifierHead::params(const std::string& prefix) const {
  return head_params(prefix, weight_, bias_);
}

Tensor node_loss(const NodeClassifierHead& head, const Tensor& embeddings,
                 std::span<const std::int64_t> labels) {
  return softmax_cross_entropy(head.logits(embeddings), labels);
}

Tensor edge_loss(const EdgeClassifierHead& head, const Tensor& h_head, const Tensor& h_tail,
                 std::span<const std::int64_t> labels) {
  return softmax_cross_entropy(head.logits(h_head, h_tail), labels);
}

}  // namespace lmgnn
