#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "json.hpp"
#include "lmgnn/graph.hpp"
#include "lmgnn/model.hpp"
#include "lmgnn/sampling.hpp"

namespace lmgnn {

enum class Task { kLink, kNode, kEdge };
std::string task_name(Task task);
Task parse_task(const std::string& name);  // ConfigError on unknown names
// Validation metric that drives checkpoint selection.
std::string primary_metric(Task task);

struct EvalReport {
  Task task = Task::kLink;
  Split split = Split::kTest;
  std::map<std::string, double> metrics;
  std::string negative_mode = "none";
  std::size_t num_queries = 0;

  double primary() const { return metrics.at(primary_metric(task)); }
  nlohmann::json to_json() const;
};

// Graph used for message passing: for the link task the valid/test labeled
// edges are removed so they cannot leak into neighborhoods.
HeteroGraph message_graph(const HeteroGraph& graph, Task task);

// [total_nodes x F] text embeddings by global id; featureless rows are zero.
Tensor encode_all_texts(const LmGnnModel& model, const HeteroGraph& graph, std::size_t chunk);

// Final-layer embeddings of every node (rows by global id), computed over the
// full neighborhoods of `mp_graph` without gradients.
Tensor infer_embeddings(const LmGnnModel& model, const HeteroGraph& mp_graph,
                        const Tensor& text_table);

struct LinkEvalOptions {
  // Types up to this size are ranked exhaustively; larger ones against
  // `sampled_negatives` filtered random candidates.
  NodeId full_ranking_limit = 10000;
  std::size_t sampled_negatives = 500;
  std::uint64_t seed = 0;
};

// Filtered MRR over head and tail corruption of each labeled edge in `split`.
EvalReport evaluate_link(const HeteroGraph& graph, const Tensor& embeddings,
                         const DistMult& decoder, Split split,
                         const LinkEvalOptions& options = {});
EvalReport evaluate_node(const HeteroGraph& graph, const Tensor& embeddings,
                         const NodeClassifierHead& head, Split split);
EvalReport evaluate_edge(const HeteroGraph& graph, const Tensor& embeddings,
                         const EdgeClassifierHead& head, Split split);

}  // namespace lmgnn
