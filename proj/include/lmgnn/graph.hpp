#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace lmgnn {

using NodeId = std::int64_t;

struct NodeRef {
  std::int32_t type = 0;
  NodeId local = 0;
  auto operator<=>(const NodeRef&) const = default;
};

struct NodeRefHash {
  std::size_t operator()(const NodeRef& n) const noexcept {
    return std::hash<std::uint64_t>()((static_cast<std::uint64_t>(n.type) << 48) ^
                                      static_cast<std::uint64_t>(n.local));
  }
};

struct RelationType {
  std::int32_t src_type = 0;
  std::string name;
  std::int32_t dst_type = 0;
  bool operator==(const RelationType&) const = default;
};

enum class Split : std::uint8_t { kNone = 0, kTrain, kValid, kTest };

const char* split_name(Split split);
Split parse_split(const std::string& text);  // throws std::invalid_argument

struct Edge {
  NodeId src = 0;
  NodeId dst = 0;
  bool operator==(const Edge&) const = default;
  auto operator<=>(const Edge&) const = default;
};

struct LabeledEdge {
  std::int32_t relation = 0;
  Edge edge;
  std::int32_t class_id = 0;
  Split split = Split::kNone;
  bool operator==(const LabeledEdge&) const = default;
};

// Compressed adjacency for one relation in one direction.
struct Csr {
  std::vector<NodeId> offsets;  // size = row count + 1
  std::vector<NodeId> indices;

  std::span<const NodeId> row(NodeId r) const {
    const auto b = static_cast<std::size_t>(offsets[static_cast<std::size_t>(r)]);
    const auto e = static_cast<std::size_t>(offsets[static_cast<std::size_t>(r) + 1]);
    return {indices.data() + b, e - b};
  }
};

// One direction of message flow used by the GNN. A stored relation r with
// edges u -> v yields the forward message relation (v aggregates u, named
// "r") and, when reverse messages are enabled, the reverse one (u aggregates
// v, named "r-rev").
struct MessageRelation {
  std::int32_t relation = 0;
  bool reversed = false;
  std::int32_t target_type = 0;
  std::int32_t neighbor_type = 0;
  std::string name;
};

/// Heterogeneous graph with typed node sets, typed relations stored as
/// forward and reverse CSR, optional per-node text, node labels, and labeled
/// edges with train/valid/test splits. Immutable once built.
class HeteroGraph {
 public:
  HeteroGraph() = default;

  // Validates endpoints against node counts; duplicate edges are kept.
  HeteroGraph(std::vector<std::string> node_types, std::vector<NodeId> node_counts,
              std::vector<RelationType> relations,
              std::vector<std::vector<Edge>> edges);

  // ---- structure
  std::int32_t num_node_types() const { return static_cast<std::int32_t>(node_types_.size()); }
  const std::string& node_type_name(std::int32_t t) const { return node_types_.at(static_cast<std::size_t>(t)); }
  std::optional<std::int32_t> find_node_type(const std::string& name) const;
  NodeId node_count(std::int32_t t) const { return node_counts_.at(static_cast<std::size_t>(t)); }
  std::span<const NodeId> node_counts() const { return node_counts_; }
  NodeId total_nodes() const { return type_offsets_.empty() ? 0 : type_offsets_.back(); }

  std::int32_t num_relations() const { return static_cast<std::int32_t>(relations_.size()); }
  const RelationType& relation(std::int32_t r) const { return relations_.at(static_cast<std::size_t>(r)); }
  const std::vector<RelationType>& relations() const { return relations_; }
  std::optional<std::int32_t> find_relation(std::int32_t src_type, const std::string& name,
                                            std::int32_t dst_type) const;

  std::size_t num_edges(std::int32_t r) const { return edges_.at(static_cast<std::size_t>(r)).size(); }
  std::size_t total_edges() const;
  std::span<const Edge> edges(std::int32_t r) const { return edges_.at(static_cast<std::size_t>(r)); }
  std::span<const NodeId> out_neighbors(std::int32_t r, NodeId src) const;
  std::span<const NodeId> in_neighbors(std::int32_t r, NodeId dst) const;
  bool has_edge(std::int32_t r, NodeId src, NodeId dst) const;

  std::vector<MessageRelation> message_relations(bool include_reverse) const;
  std::span<const NodeId> neighbors(const MessageRelation& m, NodeId target_local) const;

  // Dense index over all nodes: type-major, local-minor.
  NodeId global_id(const NodeRef& n) const { return type_offsets_[static_cast<std::size_t>(n.type)] + n.local; }
  NodeRef node_ref(NodeId global) const;
  bool contains(const NodeRef& n) const;

  // ---- text
  void set_texts(std::vector<std::vector<std::string>> per_type);
  const std::string& text(const NodeRef& n) const;
  // A type is texted when at least one of its nodes carries text; featureless
  // types are embedded by learned tables instead of the text encoder.
  bool type_has_text(std::int32_t t) const;

  // ---- labels and splits
  void set_node_labels(std::vector<std::vector<std::int32_t>> labels,
                       std::vector<std::vector<Split>> splits);
  std::optional<std::int32_t> node_label(const NodeRef& n) const;
  Split node_split(const NodeRef& n) const;
  std::int32_t num_node_classes() const { return num_node_classes_; }
  std::vector<NodeRef> labeled_nodes(Split split) const;

  void set_edge_labels(std::vector<LabeledEdge> labels);
  const std::vector<LabeledEdge>& edge_labels() const { return edge_labels_; }
  std::int32_t num_edge_classes() const { return num_edge_classes_; }
  // Relation carrying edge labels (the link / edge task relation), if any.
  std::optional<std::int32_t> labeled_relation() const;
  std::vector<LabeledEdge> labeled_edges(Split split) const;

  // Copy without the given edges (matched by endpoints, all duplicates).
  HeteroGraph without_edges(std::int32_t relation, std::span<const Edge> drop) const;

  std::size_t max_degree() const;

 private:
  void build_index();

  std::vector<std::string> node_types_;
  std::vector<NodeId> node_counts_;
  std::vector<NodeId> type_offsets_;
  std::vector<RelationType> relations_;
  std::vector<std::vector<Edge>> edges_;
  std::vector<Csr> forward_;  // src -> dst
  std::vector<Csr> reverse_;  // dst -> src

  std::vector<std::vector<std::string>> text_;
  std::vector<bool> type_has_text_;
  std::vector<std::vector<std::int32_t>> node_labels_;
  std::vector<std::vector<Split>> node_splits_;
  std::int32_t num_node_classes_ = 0;
  std::vector<LabeledEdge> edge_labels_;
  std::int32_t num_edge_classes_ = 0;
};

// ---- directory format: nodes.tsv, edges.tsv, node_labels.tsv, edge_labels.tsv
HeteroGraph load_graph(const std::filesystem::path& directory);
void save_graph(const HeteroGraph& graph, const std::filesystem::path& directory);

// ---- planted-cluster generator
struct SyntheticSpec {
  std::int32_t clusters = 4;
  NodeId nodes_per_type = 500;
  double intra_probability = 0.06;
  double inter_probability = 0.0005;
  std::int32_t vocabulary_size = 400;
  std::int32_t tokens_per_node = 8;
  // Share of tokens drawn from the node's cluster topic (rest uniform).
  double topic_share = 0.8;
  std::uint64_t seed = 0;
};

// Two node types ("query", "product") and two relations
// (query-purchase->product, product-co_view->product). Node label = cluster;
// purchase edges are labeled 0 when both endpoints share a cluster, else 1.
// Labeled nodes and purchase edges are split 60/10/30.
struct SyntheticGraph {
  HeteroGraph graph;
  std::vector<std::vector<std::int32_t>> clusters;  // per type, per node
};
SyntheticGraph generate_synthetic(const SyntheticSpec& spec);

}  // namespace lmgnn
