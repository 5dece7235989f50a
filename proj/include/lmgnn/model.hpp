#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "lmgnn/decoders.hpp"
#include "lmgnn/gnn.hpp"
#include "lmgnn/graph.hpp"
#include "lmgnn/text_encoder.hpp"

namespace lmgnn {

enum class ParamGroup { kLm, kGnn, kHeads };

struct ModelConfig {
  TextEncoderConfig encoder;  // vocab_size is taken from the vocabulary
  bool per_type_encoder = false;
  GnnConfig gnn;              // in_dim is taken from the encoder width
  bool include_reverse = true;
  bool head_bias = true;
};

nlohmann::json to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const nlohmann::json& j);

/// Text encoder(s), GNN, and every decoder, bound to one graph's node set.
class LmGnnModel {
 public:
  LmGnnModel(const HeteroGraph& graph, Vocab vocab, ModelConfig config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  const Vocab& vocab() const { return vocab_; }
  std::size_t text_dim() const { return config_.encoder.dim; }
  std::size_t embedding_dim() const { return config_.gnn.hidden_dim; }

  const TextEncoder& encoder_for(std::int32_t type) const;
  std::vector<TextEncoder>& encoders() { return encoders_; }
  const RgcnStack& gnn() const { return gnn_; }
  // Structure decoder over raw text embeddings (graph-aware pre-fine-tuning).
  const DistMult& lm_decoder() const { return lm_decoder_; }
  // Structure decoder over GNN embeddings.
  const DistMult& link_decoder() const { return link_decoder_; }
  const NodeClassifierHead& node_head() const { return node_head_; }
  const EdgeClassifierHead& edge_head() const { return edge_head_; }

  ParamList params(ParamGroup group) const;
  ParamList all_params() const;

  bool texted(std::int32_t type) const;
  // Cached token ids of a node's text.
  TokenBatch token_batch(std::span<const NodeRef> nodes) const;
  // Differentiable CLS embeddings of texted nodes, rows in input order.
  Tensor encode(std::span<const NodeRef> nodes) const;
  // Gradient-free encoding in chunks of `chunk` nodes.
  Tensor encode_no_grad(std::span<const NodeRef> nodes, std::size_t chunk) const;

 private:
  ModelConfig config_;
  Vocab vocab_;
  const HeteroGraph* graph_;
  std::vector<std::int32_t> encoder_of_type_;
  std::vector<TextEncoder> encoders_;
  std::vector<std::vector<std::int64_t>> tokens_;  // per global id, [PAD]-trimmed
  RgcnStack gnn_;
  DistMult lm_decoder_;
  DistMult link_decoder_;
  NodeClassifierHead node_head_;
  EdgeClassifierHead edge_head_;
};

}  // namespace lmgnn
