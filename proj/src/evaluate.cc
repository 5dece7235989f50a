#include <algorithm>
#include <numeric>
#include <random>

#include "lmgnn/errors.hpp"
#include "lmgnn/evaluate.hpp"
#include "lmgnn/metrics.hpp"
#include "lmgnn/ops.hpp"

namespace lmgnn {
namespace {

std::vector<std::int64_t> rows_of(const HeteroGraph& graph, std::span<const NodeRef> nodes) {
  std::vector<std::int64_t> rows(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) rows[i] = graph.global_id(nodes[i]);
  return rows;
}

std::vector<std::int64_t> argmax_rows(const Tensor& logits) {
  std::vector<std::int64_t> out(logits.rows());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < logits.cols(); ++c)
      if (logits.at(r, c) > logits.at(r, best)) best = c;
    out[r] = static_cast<std::int64_t>(best);
  }
  return out;
}

double dot3(std::span<const double> a, std::span<const double> r, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * r[i] * b[i];
  return s;
}

}  // namespace

std::string task_name(Task task) {
  switch (task) {
    case Task::kLink: return "link";
    case Task::kNode: return "node";
    case Task::kEdge: return "edge";
  }
  return "?";
}

Task parse_task(const std::string& name) {
  if (name == "link") return Task::kLink;
  if (name == "node") return Task::kNode;
  if (name == "edge") return Task::kEdge;
  throw ConfigError("unknown task '" + name + "' (expected link, node or edge)");
}

std::string primary_metric(Task task) {
  switch (task) {
    case Task::kLink: return "mrr";
    case Task::kNode: return "accuracy";
    case Task::kEdge: return "macro_f1";
  }
  return "?";
}

nlohmann::json EvalReport::to_json() const {
  return {{"task", task_name(task)},
          {"split", split_name(split)},
          {"metrics", metrics},
          {"negative_mode", negative_mode},
          {"num_queries", num_queries}};
}

HeteroGraph message_graph(const HeteroGraph& graph, Task task) {
  const auto relation = graph.labeled_relation();
  if (task != Task::kLink || !relation) return graph;
  std::vector<Edge> held_out;
  for (const auto& e : graph.edge_labels())
    if (e.split == Split::kValid || e.split == Split::kTest) held_out.push_back(e.edge);
  return graph.without_edges(*relation, held_out);
}

Tensor encode_all_texts(const LmGnnModel& model, const HeteroGraph& graph, std::size_t chunk) {
  const auto n = static_cast<std::size_t>(graph.total_nodes());
  const std::size_t f = model.text_dim();
  std::vector<double> table(n * f, 0.0);
  std::vector<NodeRef> texted;
  for (NodeId g = 0; g < graph.total_nodes(); ++g) {
    const NodeRef node = graph.node_ref(g);
    if (model.texted(node.type)) texted.push_back(node);
  }
  const Tensor enc = model.encode_no_grad(texted, chunk);
  for (std::size_t i = 0; i < texted.size(); ++i) {
    const auto g = static_cast<std::size_t>(graph.global_id(texted[i]));
    std::copy_n(enc.data().begin() + static_cast<std::ptrdiff_t>(i * f), f,
                table.begin() + static_cast<std::ptrdiff_t>(g * f));
  }
  return Tensor::from({n, f}, std::move(table));
}

Tensor infer_embeddings(const LmGnnModel& model, const HeteroGraph& mp_graph,
                        const Tensor& text_table) {
  NoGradScope no_grad;
  const auto n = static_cast<std::size_t>(mp_graph.total_nodes());
  LMGNN_CHECK(text_table.rank() == 2 && text_table.rows() == n, ShapeError,
              "text table " << shape_str(text_table.shape()) << " for " << n << " nodes");
  std::vector<NodeRef> all(n);
  for (std::size_t g = 0; g < n; ++g) all[g] = mp_graph.node_ref(static_cast<NodeId>(g));
  const auto sampler = SamplerConfig::saturating(model.config().gnn.num_layers,
                                                 model.config().include_reverse);
  const EgoBatch batch = sample_neighbors(mp_graph, all, sampler, 0);

  std::vector<Tensor> parts;
  for (std::int32_t t = 0; t < mp_graph.num_node_types(); ++t) {
    std::vector<std::int64_t> rows(static_cast<std::size_t>(mp_graph.node_count(t)));
    std::iota(rows.begin(), rows.end(), 0);
    if (model.gnn().has_input_table(t)) {
      parts.push_back(model.gnn().input_rows(t, rows));
    } else {
      for (auto& r : rows) r = mp_graph.global_id({t, r});
      parts.push_back(gather_rows(text_table, rows));
    }
  }
  const Tensor h = gnn_forward(model.gnn(), batch, NodeFeatures{all, concat_rows(parts)});
  // Dedup mode keeps the targets in input order, i.e. by global id.
  return h;
}

EvalReport evaluate_link(const HeteroGraph& graph, const Tensor& embeddings,
                         const DistMult& decoder, Split split, const LinkEvalOptions& options) {
  const auto relation = graph.labeled_relation();
  LMGNN_CHECK(relation.has_value(), ContractError, "link evaluation needs labeled edges");
  const auto edges = graph.labeled_edges(split);
  LMGNN_CHECK(!edges.empty(), ContractError,
              "no labeled edges in split '" << split_name(split) << "'");
  const auto& rel = graph.relation(*relation);
  const std::size_t d = embeddings.cols();
  LMGNN_CHECK(decoder.dim() == d, ShapeError,
              "decoder width " << decoder.dim() << " vs embeddings " << d);
  auto row = [&](const NodeRef& n) {
    return embeddings.data().subspan(static_cast<std::size_t>(graph.global_id(n)) * d, d);
  };
  const auto r_vec = decoder.relations().data().subspan(static_cast<std::size_t>(*relation) * d, d);
  const bool full = graph.node_count(rel.src_type) <= options.full_ranking_limit &&
                    graph.node_count(rel.dst_type) <= options.full_ranking_limit;
  std::mt19937_64 rng(options.seed);

  std::vector<RankedQuery> queries;
  queries.reserve(2 * edges.size());
  for (const auto& le : edges) {
    const NodeRef head{rel.src_type, le.edge.src}, tail{rel.dst_type, le.edge.dst};
    for (const bool corrupt_head : {false, true}) {
      RankedQuery q;
      q.positive = dot3(row(head), r_vec, row(tail));
      const std::int32_t type = corrupt_head ? rel.src_type : rel.dst_type;
      const NodeId original = corrupt_head ? head.local : tail.local;
      auto known = [&](NodeId c) {
        return corrupt_head ? graph.has_edge(*relation, c, tail.local)
                            : graph.has_edge(*relation, head.local, c);
      };
      auto score = [&](NodeId c) {
        return corrupt_head ? dot3(row({type, c}), r_vec, row(tail))
                            : dot3(row(head), r_vec, row({type, c}));
      };
      if (full) {
        for (NodeId c = 0; c < graph.node_count(type); ++c)
          if (c != original && !known(c)) q.negatives.push_back(score(c));
      } else {
        std::uniform_int_distribution<NodeId> pick(0, graph.node_count(type) - 1);
        for (std::size_t tries = 0;
             q.negatives.size() < options.sampled_negatives && tries < 20 * options.sampled_negatives;
             ++tries) {
          const NodeId c = pick(rng);
          if (c != original && !known(c)) q.negatives.push_back(score(c));
        }
      }
      if (!q.negatives.empty()) queries.push_back(std::move(q));
    }
  }
  EvalReport report;
  report.task = Task::kLink;
  report.split = split;
  report.negative_mode = full ? "full" : "sampled" + std::to_string(options.sampled_negatives);
  report.num_queries = queries.size();
  report.metrics["mrr"] = mrr(queries);
  return report;
}

EvalReport evaluate_node(const HeteroGraph& graph, const Tensor& embeddings,
                         const NodeClassifierHead& head, Split split) {
  NoGradScope no_grad;
  const auto nodes = graph.labeled_nodes(split);
  LMGNN_CHECK(!nodes.empty(), ContractError,
              "no labeled nodes in split '" << split_name(split) << "'");
  std::vector<std::int64_t> labels;
  for (const auto& n : nodes) labels.push_back(*graph.node_label(n));
  const auto pred = argmax_rows(head.logits(gather_rows(embeddings, rows_of(graph, nodes))));
  EvalReport report;
  report.task = Task::kNode;
  report.split = split;
  report.num_queries = nodes.size();
  report.metrics["accuracy"] = accuracy(pred, labels);
  return report;
}

EvalReport evaluate_edge(const HeteroGraph& graph, const Tensor& embeddings,
                         const EdgeClassifierHead& head, Split split) {
  NoGradScope no_grad;
  const auto edges = graph.labeled_edges(split);
  LMGNN_CHECK(!edges.empty(), ContractError,
              "no labeled edges in split '" << split_name(split) << "'");
  std::vector<NodeRef> heads, tails;
  std::vector<std::int64_t> labels;
  for (const auto& e : edges) {
    const auto& rel = graph.relation(e.relation);
    heads.push_back({rel.src_type, e.edge.src});
    tails.push_back({rel.dst_type, e.edge.dst});
    labels.push_back(e.class_id);
  }
  const auto pred = argmax_rows(head.logits(gather_rows(embeddings, rows_of(graph, heads)),
                                            gather_rows(embeddings, rows_of(graph, tails))));
  const auto f1 = f1_scores(pred, labels, head.classes());
  EvalReport report;
  report.task = Task::kEdge;
  report.split = split;
  report.num_queries = edges.size();
  report.metrics["macro_f1"] = f1.macro;
  report.metrics["micro_f1"] = f1.micro;
  report.metrics["accuracy"] = accuracy(pred, labels);
  for (std::size_t c = 0; c < f1.per_class.size(); ++c)
    report.metrics["f1_class" + std::to_string(c)] = f1.per_class[c];
  return report;
}

}  // namespace lmgnn
