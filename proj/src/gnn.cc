#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "lmgnn/errors.hpp"
#include "lmgnn/gnn.hpp"
#include "lmgnn/ops.hpp"

namespace lmgnn {

Tensor rgcn_layer_forward(const RgcnLayer& layer, const Block& block, const Tensor& h_in,
                          bool activate) {
  LMGNN_CHECK(h_in.rank() == 2 && h_in.rows() == block.sources.size(), ShapeError,
              "rgcn layer: " << shape_str(h_in.shape()) << " feature rows for "
                             << block.sources.size() << " sources");
  LMGNN_CHECK(layer.w_rel.size() == block.edges.size(), ShapeError,
              "rgcn layer: " << layer.w_rel.size() << " relation weights for "
                             << block.edges.size() << " message relations");
  std::vector<std::int64_t> targets(block.num_targets);
  std::iota(targets.begin(), targets.end(), 0);
  Tensor out = matmul(gather_rows(h_in, targets), layer.w_self);
  const bool mean = layer.aggregation == Aggregation::kMean;
  for (std::size_t m = 0; m < block.edges.size(); ++m) {
    const auto& e = block.edges[m];
    if (e.dst.empty()) continue;
    // Aggregating before projecting is equivalent by linearity and cheaper.
    Tensor agg = scatter_aggregate(h_in, e.dst, e.src, block.num_targets, mean);
    out = add(out, matmul(agg, layer.w_rel[m]));
  }
  return activate ? relu(out) : out;
}

RgcnStack::RgcnStack(const GnnConfig& config, const HeteroGraph& graph, bool include_reverse,
                     std::mt19937_64& rng)
    : config_(config) {
  LMGNN_CHECK(config.num_layers >= 1, ContractError, "GNN needs at least one layer");
  LMGNN_CHECK(config.in_dim > 0 && config.hidden_dim > 0, ContractError,
              "GNN dimensions must be positive");
  const std::size_t relations = graph.message_relations(include_reverse).size();
  std::size_t in = config.in_dim;
  for (std::int32_t l = 0; l < config.num_layers; ++l) {
    const double std = 1.0 / std::sqrt(static_cast<double>(in * (relations + 1)));
    RgcnLayer layer;
    layer.aggregation = config.aggregation;
    layer.w_self = Tensor::randn({in, config.hidden_dim}, std, rng, true);
    for (std::size_t r = 0; r < relations; ++r)
      layer.w_rel.push_back(Tensor::randn({in, config.hidden_dim}, std, rng, true));
    layers_.push_back(std::move(layer));
    in = config.hidden_dim;
  }
  input_tables_.resize(static_cast<std::size_t>(graph.num_node_types()));
  for (std::int32_t t = 0; t < graph.num_node_types(); ++t)
    if (!graph.type_has_text(t))
      input_tables_[static_cast<std::size_t>(t)] = Tensor::randn(
          {static_cast<std::size_t>(graph.node_count(t)), config.in_dim}, 1.0, rng, true);
}

bool RgcnStack::has_input_table(std::int32_t type) const {
  return type >= 0 && static_cast<std::size_t>(type) < input_tables_.size() &&
         input_tables_[static_cast<std::size_t>(type)].defined();
}

Tensor RgcnStack::input_rows(std::int32_t type, std::span<const std::int64_t> locals) const {
  LMGNN_CHECK(has_input_table(type), ContractError, "node type " << type << " has no input table");
  return gather_rows(input_tables_[static_cast<std::size_t>(type)], locals);
}

ParamList RgcnStack::params(const std::string& prefix) const {
  ParamList out;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const std::string p = prefix + "layer" + std::to_string(l) + ".";
    out.push_back({p + "w_self", layers_[l].w_self});
    for (std::size_t r = 0; r < layers_[l].w_rel.size(); ++r)
      out.push_back({p + "w_rel" + std::to_string(r), layers_[l].w_rel[r]});
  }
  for (std::size_t t = 0; t < input_tables_.size(); ++t)
    if (input_tables_[t].defined())
      out.push_back({prefix + "input_table" + std::to_string(t), input_tables_[t]});
  return out;
}

Tensor gnn_forward(const RgcnStack& stack, const EgoBatch& batch, const Tensor& input_features) {
  const auto& layers = stack.layers();
  LMGNN_CHECK(layers.size() == batch.num_layers(), ContractError,
              "GNN has " << layers.size() << " layers, batch has " << batch.num_layers());
  Tensor h = input_features;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const bool last = l + 1 == layers.size();
    h = rgcn_layer_forward(layers[l], batch.blocks[l], h, !last || stack.config().activate_last);
  }
  return h;
}

Tensor gnn_forward(const RgcnStack& stack, const EgoBatch& batch, const NodeFeatures& features) {
  LMGNN_CHECK(features.rows.defined() && features.rows.rank() == 2 &&
                  features.rows.rows() == features.nodes.size(),
              ShapeError, "feature table rows do not match its node list");
  std::unordered_map<NodeRef, std::int64_t, NodeRefHash> row_of;
  for (std::size_t i = 0; i < features.nodes.size(); ++i)
    row_of.emplace(features.nodes[i], static_cast<std::int64_t>(i));
  std::vector<std::int64_t> rows;
  std::vector<NodeRef> missing;
  for (const auto& n : batch.input_nodes()) {
    auto it = row_of.find(n);
    if (it == row_of.end()) {
      missing.push_back(n);
      continue;
    }
    rows.push_back(it->second);
  }
  if (!missing.empty()) {
    std::ostringstream msg;
    msg << "missing input features for " << missing.size() << " node(s):";
    for (std::size_t i = 0; i < missing.size() && i < 20; ++i)
      msg << " (" << missing[i].type << "," << missing[i].local << ")";
    throw ContractError(msg.str());
  }
  return gnn_forward(stack, batch, gather_rows(features.rows, rows));
}

}  // namespace lmgnn
