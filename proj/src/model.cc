#include <algorithm>
#include <random>

#include "lmgnn/errors.hpp"
#include "lmgnn/model.hpp"
#include "lmgnn/ops.hpp"

namespace lmgnn {

nlohmann::json to_json(const ModelConfig& c) {
  return {{"encoder_dim", c.encoder.dim},
          {"encoder_layers", c.encoder.layers},
          {"encoder_heads", c.encoder.heads},
          {"max_len", c.encoder.max_len},
          {"per_type_encoder", c.per_type_encoder},
          {"hidden_dim", c.gnn.hidden_dim},
          {"num_layers", c.gnn.num_layers},
          {"aggregation", c.gnn.aggregation == Aggregation::kMean ? "mean" : "sum"},
          {"activate_last", c.gnn.activate_last},
          {"include_reverse", c.include_reverse},
          {"head_bias", c.head_bias}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  try {
    ModelConfig c;
    c.encoder.dim = j.at("encoder_dim").get<std::size_t>();
    c.encoder.layers = j.at("encoder_layers").get<std::size_t>();
    c.encoder.heads = j.at("encoder_heads").get<std::size_t>();
    c.encoder.max_len = j.at("max_len").get<std::size_t>();
    c.per_type_encoder = j.at("per_type_encoder").get<bool>();
    c.gnn.hidden_dim = j.at("hidden_dim").get<std::size_t>();
    c.gnn.num_layers = j.at("num_layers").get<std::int32_t>();
    c.gnn.aggregation = j.at("aggregation").get<std::string>() == "sum" ? Aggregation::kSum
                                                                        : Aggregation::kMean;
    c.gnn.activate_last = j.at("activate_last").get<bool>();
    c.include_reverse = j.at("include_reverse").get<bool>();
    c.head_bias = j.at("head_bias").get<bool>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("model config: ") + e.what());
  }
}

LmGnnModel::LmGnnModel(const HeteroGraph& graph, Vocab vocab, ModelConfig config,
                       std::uint64_t seed)
    : config_(std::move(config)), vocab_(std::move(vocab)), graph_(&graph) {
  config_.encoder.vocab_size = vocab_.size();
  config_.gnn.in_dim = config_.encoder.dim;
  std::mt19937_64 rng(seed);

  const auto types = static_cast<std::size_t>(graph.num_node_types());
  encoder_of_type_.assign(types, -1);
  for (std::int32_t t = 0; t < graph.num_node_types(); ++t) {
    if (!graph.type_has_text(t)) continue;
    if (config_.per_type_encoder || encoders_.empty()) encoders_.emplace_back(config_.encoder, rng);
    encoder_of_type_[static_cast<std::size_t>(t)] = static_cast<std::int32_t>(encoders_.size() - 1);
  }

  tokens_.resize(static_cast<std::size_t>(graph.total_nodes()));
  for (NodeId g = 0; g < graph.total_nodes(); ++g) {
    const NodeRef n = graph.node_ref(g);
    if (!texted(n.type)) continue;
    auto ids = tokenize(vocab_, graph.text(n), config_.encoder.max_len);
    while (ids.size() > 1 && ids.back() == Vocab::kPad) ids.pop_back();
    tokens_[static_cast<std::size_t>(g)] = std::move(ids);
  }

  gnn_ = RgcnStack(config_.gnn, graph, config_.include_reverse, rng);
  const auto relations = static_cast<std::size_t>(std::max(graph.num_relations(), 1));
  lm_decoder_ = DistMult(relations, config_.encoder.dim, rng);
  link_decoder_ = DistMult(relations, config_.gnn.hidden_dim, rng);
  node_head_ = NodeClassifierHead(config_.gnn.hidden_dim,
                                  static_cast<std::size_t>(std::max(graph.num_node_classes(), 1)),
                                  config_.head_bias, rng);
  edge_head_ = EdgeClassifierHead(config_.gnn.hidden_dim,
                                  static_cast<std::size_t>(std::max(graph.num_edge_classes(), 1)),
                                  config_.head_bias, rng);
}

bool LmGnnModel::texted(std::int32_t type) const {
  return type >= 0 && static_cast<std::size_t>(type) < encoder_of_type_.size() &&
         encoder_of_type_[static_cast<std::size_t>(type)] >= 0;
}

const TextEncoder& LmGnnModel::encoder_for(std::int32_t type) const {
  LMGNN_CHECK(texted(type), ContractError, "node type " << type << " has no text encoder");
  return encoders_[static_cast<std::size_t>(encoder_of_type_[static_cast<std::size_t>(type)])];
}

ParamList LmGnnModel::params(ParamGroup group) const {
  ParamList out;
  auto append = [&out](ParamList more) {
    out.insert(out.end(), std::make_move_iterator(more.begin()), std::make_move_iterator(more.end()));
  };
  switch (group) {
    case ParamGroup::kLm:
      for (std::size_t e = 0; e < encoders_.size(); ++e)
        append(encoders_[e].params("lm.encoder" + std::to_string(e) + "."));
      append(lm_decoder_.params("lm.decoder."));
      break;
    case ParamGroup::kGnn:
      append(gnn_.params("gnn."));
      break;
    case ParamGroup::kHeads:
      append(link_decoder_.params("head.link."));
      append(node_head_.params("head.node."));
      append(edge_head_.params("head.edge."));
      break;
  }
  return out;
}

ParamList LmGnnModel::all_params() const {
  ParamList out = params(ParamGroup::kLm);
  for (auto g : {ParamGroup::kGnn, ParamGroup::kHeads})
    for (auto& p : params(g)) out.push_back(std::move(p));
  return out;
}

TokenBatch LmGnnModel::token_batch(std::span<const NodeRef> nodes) const {
  TokenBatch batch;
  batch.rows = nodes.size();
  batch.seq = 1;
  for (const auto& n : nodes) {
    LMGNN_CHECK(texted(n.type), ContractError,
                "node (" << n.type << "," << n.local << ") has no text");
    batch.seq = std::max(batch.seq, tokens_[static_cast<std::size_t>(graph_->global_id(n))].size());
  }
  batch.ids.assign(batch.rows * batch.seq, Vocab::kPad);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& ids = tokens_[static_cast<std::size_t>(graph_->global_id(nodes[i]))];
    std::copy(ids.begin(), ids.end(), batch.ids.begin() + static_cast<std::ptrdiff_t>(i * batch.seq));
  }
  return batch;
}

Tensor LmGnnModel::encode(std::span<const NodeRef> nodes) const {
  LMGNN_CHECK(!nodes.empty(), ContractError, "encode: no nodes");
  if (encoders_.size() == 1) return encoders_[0].encode_cls(token_batch(nodes));
  // Group by encoder, then restore the input order.
  std::vector<std::vector<NodeRef>> groups(encoders_.size());
  std::vector<std::pair<std::size_t, std::size_t>> slot(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    LMGNN_CHECK(texted(nodes[i].type), ContractError,
                "node (" << nodes[i].type << "," << nodes[i].local << ") has no text");
    const auto e = static_cast<std::size_t>(encoder_of_type_[static_cast<std::size_t>(nodes[i].type)]);
    slot[i] = {e, groups[e].size()};
    groups[e].push_back(nodes[i]);
  }
  std::vector<Tensor> parts;
  std::vector<std::size_t> offset(encoders_.size(), 0);
  std::size_t total = 0;
  for (std::size_t e = 0; e < groups.size(); ++e) {
    offset[e] = total;
    if (groups[e].empty()) continue;
    parts.push_back(encoders_[e].encode_cls(token_batch(groups[e])));
    total += groups[e].size();
  }
  std::vector<std::int64_t> order(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i)
    order[i] = static_cast<std::int64_t>(offset[slot[i].first] + slot[i].second);
  return gather_rows(concat_rows(parts), order);
}

Tensor LmGnnModel::encode_no_grad(std::span<const NodeRef> nodes, std::size_t chunk) const {
  LMGNN_CHECK(chunk > 0, ContractError, "encode chunk must be positive");
  NoGradScope no_grad;
  std::vector<Tensor> parts;
  for (std::size_t start = 0; start < nodes.size(); start += chunk)
    parts.push_back(encode(nodes.subspan(start, std::min(chunk, nodes.size() - start))));
  if (parts.empty()) return Tensor::zeros({0, text_dim()});
  return parts.size() == 1 ? parts[0] : concat_rows(parts);
}

}  // namespace lmgnn
