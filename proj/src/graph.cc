#include <algorithm>
#include <stdexcept>

#include "lmgnn/errors.hpp"
#include "lmgnn/graph.hpp"

namespace lmgnn {

const char* split_name(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kValid: return "valid";
    case Split::kTest: return "test";
    case Split::kNone: break;
  }
  return "none";
}

Split parse_split(const std::string& text) {
  if (text == "train") return Split::kTrain;
  if (text == "valid") return Split::kValid;
  if (text == "test") return Split::kTest;
  if (text == "none") return Split::kNone;
  throw std::invalid_argument("unknown split '" + text + "'");
}

namespace {

Csr build_csr(NodeId rows, const std::vector<Edge>& edges, bool by_src) {
  Csr csr;
  csr.offsets.assign(static_cast<std::size_t>(rows) + 1, 0);
  for (const auto& e : edges) ++csr.offsets[static_cast<std::size_t>(by_src ? e.src : e.dst) + 1];
  for (std::size_t i = 1; i < csr.offsets.size(); ++i) csr.offsets[i] += csr.offsets[i - 1];
  csr.indices.resize(edges.size());
  std::vector<NodeId> fill(csr.offsets.begin(), csr.offsets.end() - 1);
  for (const auto& e : edges) {
    const auto row = static_cast<std::size_t>(by_src ? e.src : e.dst);
    csr.indices[static_cast<std::size_t>(fill[row]++)] = by_src ? e.dst : e.src;
  }
  for (std::size_t r = 0; r + 1 < csr.offsets.size(); ++r)
    std::sort(csr.indices.begin() + csr.offsets[r], csr.indices.begin() + csr.offsets[r + 1]);
  return csr;
}

}  // namespace

HeteroGraph::HeteroGraph(std::vector<std::string> node_types,
                         std::vector<NodeId> node_counts,
                         std::vector<RelationType> relations,
                         std::vector<std::vector<Edge>> edges)
    : node_types_(std::move(node_types)),
      node_counts_(std::move(node_counts)),
      relations_(std::move(relations)),
      edges_(std::move(edges)) {
  LMGNN_CHECK(node_types_.size() == node_counts_.size(), ContractError,
              node_types_.size() << " node types but " << node_counts_.size()
                                 << " node counts");
  LMGNN_CHECK(relations_.size() == edges_.size(), ContractError,
              relations_.size() << " relations but " << edges_.size() << " edge lists");
  for (NodeId n : node_counts_)
    LMGNN_CHECK(n >= 0, ContractError, "negative node count " << n);
  for (std::size_t r = 0; r < relations_.size(); ++r) {
    const auto& rel = relations_[r];
    LMGNN_CHECK(rel.src_type >= 0 && rel.src_type < num_node_types() &&
                    rel.dst_type >= 0 && rel.dst_type < num_node_types(),
                IndexError, "relation '" << rel.name << "' references an unknown node type");
    for (const auto& e : edges_[r]) {
      LMGNN_CHECK(e.src >= 0 && e.src < node_count(rel.src_type) && e.dst >= 0 &&
                      e.dst < node_count(rel.dst_type),
                  IndexError,
                  "edge (" << e.src << " -> " << e.dst << ") of relation '" << rel.name
                           << "' outside node counts " << node_count(rel.src_type)
                           << "/" << node_count(rel.dst_type));
    }
  }
  build_index();
  text_.resize(node_types_.size());
  for (std::size_t t = 0; t < node_types_.size(); ++t)
    text_[t].assign(static_cast<std::size_t>(node_counts_[t]), std::string());
  type_has_text_.assign(node_types_.size(), false);
  node_labels_.resize(node_types_.size());
  node_splits_.resize(node_types_.size());
  for (std::size_t t = 0; t < node_types_.size(); ++t) {
    node_labels_[t].assign(static_cast<std::size_t>(node_counts_[t]), -1);
    node_splits_[t].assign(static_cast<std::size_t>(node_counts_[t]), Split::kNone);
  }
}

void HeteroGraph::build_index() {
  type_offsets_.assign(node_counts_.size() + 1, 0);
  for (std::size_t t = 0; t < node_counts_.size(); ++t)
    type_offsets_[t + 1] = type_offsets_[t] + node_counts_[t];
  forward_.clear();
  reverse_.clear();
  for (std::size_t r = 0; r < relations_.size(); ++r) {
    forward_.push_back(build_csr(node_count(relations_[r].src_type), edges_[r], true));
    reverse_.push_back(build_csr(node_count(relations_[r].dst_type), edges_[r], false));
  }
}

std::optional<std::int32_t> HeteroGraph::find_node_type(const std::string& name) const {
  for (std::size_t t = 0; t < node_types_.size(); ++t)
    if (node_types_[t] == name) return static_cast<std::int32_t>(t);
  return std::nullopt;
}

std::optional<std::int32_t> HeteroGraph::find_relation(std::int32_t src_type,
                                                       const std::string& name,
                                                       std::int32_t dst_type) const {
  for (std::size_t r = 0; r < relations_.size(); ++r) {
    const auto& rel = relations_[r];
    if (rel.src_type == src_type && rel.name == name && rel.dst_type == dst_type)
      return static_cast<std::int32_t>(r);
  }
  return std::nullopt;
}

std::size_t HeteroGraph::total_edges() const {
  std::size_t total = 0;
  for (const auto& e : edges_) total += e.size();
  return total;
}

std::span<const NodeId> HeteroGraph::out_neighbors(std::int32_t r, NodeId src) const {
  return forward_.at(static_cast<std::size_t>(r)).row(src);
}

std::span<const NodeId> HeteroGraph::in_neighbors(std::int32_t r, NodeId dst) const {
  return reverse_.at(static_cast<std::size_t>(r)).row(dst);
}

bool HeteroGraph::has_edge(std::int32_t r, NodeId src, NodeId dst) const {
  if (src < 0 || src >= node_count(relation(r).src_type)) return false;
  auto row = out_neighbors(r, src);
  return std::binary_search(row.begin(), row.end(), dst);
}

std::vector<MessageRelation> HeteroGraph::message_relations(bool include_reverse) const {
  std::vector<MessageRelation> out;
  for (std::int32_t r = 0; r < num_relations(); ++r) {
    const auto& rel = relation(r);
    out.push_back({r, false, rel.dst_type, rel.src_type, rel.name});
    if (include_reverse)
      out.push_back({r, true, rel.src_type, rel.dst_type, rel.name + "-rev"});
  }
  return out;
}

std::span<const NodeId> HeteroGraph::neighbors(const MessageRelation& m,
                                               NodeId target_local) const {
  return m.reversed ? out_neighbors(m.relation, target_local)
                    : in_neighbors(m.relation, target_local);
}

NodeRef HeteroGraph::node_ref(NodeId global) const {
  LMGNN_CHECK(global >= 0 && global < total_nodes(), IndexError,
              "global node id " << global << " outside [0, " << total_nodes() << ")");
  auto it = std::upper_bound(type_offsets_.begin(), type_offsets_.end(), global);
  const auto t = static_cast<std::int32_t>(it - type_offsets_.begin() - 1);
  return {t, global - type_offsets_[static_cast<std::size_t>(t)]};
}

bool HeteroGraph::contains(const NodeRef& n) const {
  return n.type >= 0 && n.type < num_node_types() && n.local >= 0 &&
         n.local < node_count(n.type);
}

void HeteroGraph::set_texts(std::vector<std::vector<std::string>> per_type) {
  LMGNN_CHECK(per_type.size() == node_types_.size(), ContractError,
              "text table covers " << per_type.size() << " of " << node_types_.size()
                                   << " node types");
  for (std::size_t t = 0; t < per_type.size(); ++t) {
    LMGNN_CHECK(per_type[t].size() == static_cast<std::size_t>(node_counts_[t]),
                ContractError,
                "text table for type '" << node_types_[t] << "' has " << per_type[t].size()
                                        << " rows, expected " << node_counts_[t]);
    type_has_text_[t] = std::any_of(per_type[t].begin(), per_type[t].end(),
                                    [](const std::string& s) { return !s.empty(); });
  }
  text_ = std::move(per_type);
}

const std::string& HeteroGraph::text(const NodeRef& n) const {
  return text_.at(static_cast<std::size_t>(n.type)).at(static_cast<std::size_t>(n.local));
}

bool HeteroGraph::type_has_text(std::int32_t t) const {
  return type_has_text_.at(static_cast<std::size_t>(t));
}

void HeteroGraph::set_node_labels(std::vector<std::vector<std::int32_t>> labels,
                                  std::vector<std::vector<Split>> splits) {
  LMGNN_CHECK(labels.size() == node_types_.size() && splits.size() == node_types_.size(),
              ContractError, "label tables must cover every node type");
  std::int32_t max_label = -1;
  for (std::size_t t = 0; t < labels.size(); ++t) {
    LMGNN_CHECK(labels[t].size() == static_cast<std::size_t>(node_counts_[t]) &&
                    splits[t].size() == labels[t].size(),
                ContractError, "label table size mismatch for type '" << node_types_[t] << "'");
    for (std::size_t i = 0; i < labels[t].size(); ++i) {
      // Splits may only cover labeled nodes.
      LMGNN_CHECK(labels[t][i] >= 0 || splits[t][i] == Split::kNone, ContractError,
                  "unlabeled node " << node_types_[t] << ":" << i << " carries a split");
      max_label = std::max(max_label, labels[t][i]);
    }
  }
  node_labels_ = std::move(labels);
  node_splits_ = std::move(splits);
  num_node_classes_ = max_label + 1;
}

std::optional<std::int32_t> HeteroGraph::node_label(const NodeRef& n) const {
  const auto v = node_labels_.at(static_cast<std::size_t>(n.type)).at(static_cast<std::size_t>(n.local));
  if (v < 0) return std::nullopt;
  return v;
}

Split HeteroGraph::node_split(const NodeRef& n) const {
  return node_splits_.at(static_cast<std::size_t>(n.type)).at(static_cast<std::size_t>(n.local));
}

std::vector<NodeRef> HeteroGraph::labeled_nodes(Split split) const {
  std::vector<NodeRef> out;
  for (std::int32_t t = 0; t < num_node_types(); ++t)
    for (NodeId i = 0; i < node_count(t); ++i)
      if (node_splits_[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)] == split)
        out.push_back({t, i});
  return out;
}

void HeteroGraph::set_edge_labels(std::vector<LabeledEdge> labels) {
  std::int32_t max_class = -1;
  for (const auto& l : labels) {
    LMGNN_CHECK(l.relation >= 0 && l.relation < num_relations(), IndexError,
                "edge label on unknown relation " << l.relation);
    LMGNN_CHECK(l.relation == labels.front().relation, ContractError,
                "edge labels must all belong to one relation");
    LMGNN_CHECK(has_edge(l.relation, l.edge.src, l.edge.dst), ContractError,
                "edge label on missing edge (" << l.edge.src << " -> " << l.edge.dst << ")");
    LMGNN_CHECK(l.class_id >= 0, ContractError, "negative edge class " << l.class_id);
    max_class = std::max(max_class, l.class_id);
  }
  edge_labels_ = std::move(labels);
  num_edge_classes_ = max_class + 1;
}

std::optional<std::int32_t> HeteroGraph::labeled_relation() const {
  if (edge_labels_.empty()) return std::nullopt;
  return edge_labels_.front().relation;
}

std::vector<LabeledEdge> HeteroGraph::labeled_edges(Split split) const {
  std::vector<LabeledEdge> out;
  for (const auto& l : edge_labels_)
    if (l.split == split) out.push_back(l);
  return out;
}

HeteroGraph HeteroGraph::without_edges(std::int32_t relation,
                                       std::span<const Edge> drop) const {
  std::vector<Edge> sorted(drop.begin(), drop.end());
  std::sort(sorted.begin(), sorted.end());
  auto edges = edges_;
  auto& list = edges.at(static_cast<std::size_t>(relation));
  std::erase_if(list, [&](const Edge& e) {
    return std::binary_search(sorted.begin(), sorted.end(), e);
  });
  HeteroGraph out(node_types_, node_counts_, relations_, std::move(edges));
  out.text_ = text_;
  out.type_has_text_ = type_has_text_;
  out.node_labels_ = node_labels_;
  out.node_splits_ = node_splits_;
  out.num_node_classes_ = num_node_classes_;
  // Labels of removed edges are kept: they describe held-out entities.
  out.edge_labels_ = edge_labels_;
  out.num_edge_classes_ = num_edge_classes_;
  return out;
}

std::size_t HeteroGraph::max_degree() const {
  std::size_t best = 0;
  for (std::size_t r = 0; r < relations_.size(); ++r) {
    for (const Csr* csr : {&forward_[r], &reverse_[r]})
      for (std::size_t i = 0; i + 1 < csr->offsets.size(); ++i)
        best = std::max(best, static_cast<std::size_t>(csr->offsets[i + 1] - csr->offsets[i]));
  }
  return best;
}

}  // namespace lmgnn
