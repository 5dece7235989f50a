#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "lmgnn/graph.hpp"
#include "lmgnn/sampling.hpp"
#include "lmgnn/tensor.hpp"

namespace lmgnn {

enum class Aggregation { kSum, kMean };

/// Relational graph convolution with a self-projection:
///   h'_n = act(W_self h_n + sum_r agg_{n' in N_r(n)} W_r h_{n'})
struct RgcnLayer {
  Tensor w_self;               // [F_in x F_out]
  std::vector<Tensor> w_rel;   // one [F_in x F_out] per message relation
  Aggregation aggregation = Aggregation::kMean;
};

// h_in holds one row per block source; returns one row per block target.
Tensor rgcn_layer_forward(const RgcnLayer& layer, const Block& block, const Tensor& h_in,
                          bool activate = true);

struct GnnConfig {
  std::size_t in_dim = 64;
  std::size_t hidden_dim = 128;
  std::int32_t num_layers = 2;
  Aggregation aggregation = Aggregation::kMean;
  bool activate_last = false;
};

// Input rows keyed by node; order need not match the batch.
struct NodeFeatures {
  std::vector<NodeRef> nodes;
  Tensor rows;
};

class RgcnStack {
 public:
  RgcnStack() = default;
  // One weight per message relation of `graph`; node types without text get
  // a learned per-node input table.
  RgcnStack(const GnnConfig& config, const HeteroGraph& graph, bool include_reverse,
            std::mt19937_64& rng);

  const GnnConfig& config() const { return config_; }
  std::vector<RgcnLayer>& layers() { return layers_; }
  const std::vector<RgcnLayer>& layers() const { return layers_; }

  bool has_input_table(std::int32_t type) const;
  // Rows of the featureless-type table, differentiable.
  Tensor input_rows(std::int32_t type, std::span<const std::int64_t> locals) const;

  ParamList params(const std::string& prefix) const;

 private:
  GnnConfig config_;
  std::vector<RgcnLayer> layers_;
  std::vector<Tensor> input_tables_;  // per node type; undefined for texted types
};

// Input rows aligned with batch.input_nodes().
Tensor gnn_forward(const RgcnStack& stack, const EgoBatch& batch, const Tensor& input_features);
// Throws ContractError naming the input nodes without a feature row.
Tensor gnn_forward(const RgcnStack& stack, const EgoBatch& batch, const NodeFeatures& features);

}  // namespace lmgnn
