#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <string_view>

#include "lmgnn/errors.hpp"
#include "lmgnn/graph.hpp"

namespace lmgnn {
namespace {

namespace fs = std::filesystem;

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find('\t', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

// Rows of a TSV file after its header line, each paired with its 1-based line
// number.
struct TsvFile {
  std::string name;
  std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;
};

TsvFile read_tsv(const fs::path& directory, const std::string& name) {
  const fs::path path = directory / name;
  std::ifstream in(path);
  LMGNN_CHECK(in.good(), LoadError, path.string() << ": missing or unreadable file");
  TsvFile file{name, {}};
  std::string line;
  std::size_t line_no = 0;
  bool header = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (header) {
      header = false;
      continue;
    }
    if (line.empty()) continue;
    file.rows.emplace_back(line_no, split_tabs(line));
  }
  LMGNN_CHECK(!header, LoadError, path.string() << ": empty file (header line expected)");
  return file;
}

[[noreturn]] void fail(const TsvFile& file, std::size_t line, const std::string& what) {
  throw LoadError(file.name + ":" + std::to_string(line) + ": " + what);
}

std::int64_t parse_int(const TsvFile& file, std::size_t line, const std::string& field,
                       const char* what) {
  std::int64_t value = 0;
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc() || ptr != end || field.empty())
    fail(file, line, std::string("malformed ") + what + " '" + field + "'");
  return value;
}

std::string sanitize(const std::string& text) {
  std::string out = text;
  for (char& c : out)
    if (c == '\t' || c == '\n' || c == '\r') c = ' ';
  return out;
}

}  // namespace

HeteroGraph load_graph(const fs::path& directory) {
  const TsvFile nodes = read_tsv(directory, "nodes.tsv");
  const TsvFile edges = read_tsv(directory, "edges.tsv");
  const TsvFile node_labels = read_tsv(directory, "node_labels.tsv");
  const TsvFile edge_labels = read_tsv(directory, "edge_labels.tsv");

  // Node types in order of first appearance; dense local ids.
  std::vector<std::string> type_names;
  std::map<std::string, std::int32_t> type_index;
  std::vector<std::map<NodeId, std::string>> texts;
  for (const auto& [line, f] : nodes.rows) {
    if (f.size() != 2 && f.size() != 3) fail(nodes, line, "expected 3 columns");
    auto [it, inserted] = type_index.emplace(f[0], static_cast<std::int32_t>(type_names.size()));
    if (inserted) {
      type_names.push_back(f[0]);
      texts.emplace_back();
    }
    const NodeId id = parse_int(nodes, line, f[1], "local_id");
    if (id < 0) fail(nodes, line, "negative local_id");
    auto& table = texts[static_cast<std::size_t>(it->second)];
    if (!table.emplace(id, f.size() == 3 ? f[2] : std::string()).second)
      fail(nodes, line, "duplicate node " + f[0] + ":" + f[1]);
  }
  std::vector<NodeId> counts;
  std::vector<std::vector<std::string>> text_table;
  for (std::size_t t = 0; t < type_names.size(); ++t) {
    const auto n = static_cast<NodeId>(texts[t].size());
    if (texts[t].rbegin()->first != n - 1)
      throw LoadError("nodes.tsv: local ids of type '" + type_names[t] + "' are not dense 0.." +
                      std::to_string(n - 1));
    counts.push_back(n);
    std::vector<std::string> col;
    col.reserve(static_cast<std::size_t>(n));
    for (auto& [id, text] : texts[t]) col.push_back(std::move(text));
    text_table.push_back(std::move(col));
  }

  auto lookup_type = [&](const TsvFile& file, std::size_t line, const std::string& name) {
    auto it = type_index.find(name);
    if (it == type_index.end()) fail(file, line, "unknown node type '" + name + "'");
    return it->second;
  };
  auto check_endpoint = [&](const TsvFile& file, std::size_t line, std::int32_t type, NodeId id) {
    if (id < 0 || id >= counts[static_cast<std::size_t>(type)])
      fail(file, line, "endpoint " + std::to_string(id) + " out of range for type '" +
                           type_names[static_cast<std::size_t>(type)] + "' (" +
                           std::to_string(counts[static_cast<std::size_t>(type)]) + " nodes)");
  };

  std::vector<RelationType> relations;
  std::vector<std::vector<Edge>> edge_lists;
  auto relation_of = [&](std::int32_t s, const std::string& name, std::int32_t d) {
    for (std::size_t r = 0; r < relations.size(); ++r)
      if (relations[r].src_type == s && relations[r].name == name && relations[r].dst_type == d)
        return static_cast<std::int32_t>(r);
    return std::int32_t{-1};
  };
  for (const auto& [line, f] : edges.rows) {
    if (f.size() != 5) fail(edges, line, "expected 5 columns");
    const auto s = lookup_type(edges, line, f[0]);
    const auto d = lookup_type(edges, line, f[3]);
    const NodeId src = parse_int(edges, line, f[1], "src_id");
    const NodeId dst = parse_int(edges, line, f[4], "dst_id");
    check_endpoint(edges, line, s, src);
    check_endpoint(edges, line, d, dst);
    auto r = relation_of(s, f[2], d);
    if (r < 0) {
      r = static_cast<std::int32_t>(relations.size());
      relations.push_back({s, f[2], d});
      edge_lists.emplace_back();
    }
    edge_lists[static_cast<std::size_t>(r)].push_back({src, dst});
  }

  HeteroGraph graph(type_names, counts, relations, std::move(edge_lists));
  graph.set_texts(std::move(text_table));

  std::vector<std::vector<std::int32_t>> labels;
  std::vector<std::vector<Split>> splits;
  for (NodeId n : counts) {
    labels.emplace_back(static_cast<std::size_t>(n), -1);
    splits.emplace_back(static_cast<std::size_t>(n), Split::kNone);
  }
  for (const auto& [line, f] : node_labels.rows) {
    if (f.size() != 4) fail(node_labels, line, "expected 4 columns");
    const auto t = lookup_type(node_labels, line, f[0]);
    const NodeId id = parse_int(node_labels, line, f[1], "local_id");
    check_endpoint(node_labels, line, t, id);
    const auto cls = parse_int(node_labels, line, f[2], "class_id");
    if (cls < 0) fail(node_labels, line, "negative class_id");
    Split split;
    try {
      split = parse_split(f[3]);
    } catch (const std::invalid_argument& e) {
      fail(node_labels, line, e.what());
    }
    auto& slot = labels[static_cast<std::size_t>(t)][static_cast<std::size_t>(id)];
    if (slot >= 0) fail(node_labels, line, "node labeled twice");
    slot = static_cast<std::int32_t>(cls);
    splits[static_cast<std::size_t>(t)][static_cast<std::size_t>(id)] = split;
  }
  graph.set_node_labels(std::move(labels), std::move(splits));

  std::vector<LabeledEdge> elabels;
  for (const auto& [line, f] : edge_labels.rows) {
    if (f.size() != 7) fail(edge_labels, line, "expected 7 columns");
    const auto s = lookup_type(edge_labels, line, f[0]);
    const auto d = lookup_type(edge_labels, line, f[3]);
    const NodeId src = parse_int(edge_labels, line, f[1], "src_id");
    const NodeId dst = parse_int(edge_labels, line, f[4], "dst_id");
    check_endpoint(edge_labels, line, s, src);
    check_endpoint(edge_labels, line, d, dst);
    const auto r = graph.find_relation(s, f[2], d);
    if (!r) fail(edge_labels, line, "unknown relation '" + f[2] + "'");
    if (!graph.has_edge(*r, src, dst)) fail(edge_labels, line, "label refers to a missing edge");
    if (!elabels.empty() && elabels.front().relation != *r)
      fail(edge_labels, line, "edge labels must all belong to one relation");
    const auto cls = parse_int(edge_labels, line, f[5], "class_id");
    if (cls < 0) fail(edge_labels, line, "negative class_id");
    Split split;
    try {
      split = parse_split(f[6]);
    } catch (const std::invalid_argument& e) {
      fail(edge_labels, line, e.what());
    }
    elabels.push_back({*r, {src, dst}, static_cast<std::int32_t>(cls), split});
  }
  graph.set_edge_labels(std::move(elabels));
  return graph;
}

void save_graph(const HeteroGraph& graph, const fs::path& directory) {
  fs::create_directories(directory);
  auto open = [&](const char* name) {
    std::ofstream out(directory / name, std::ios::binary | std::ios::trunc);
    LMGNN_CHECK(out.good(), LoadError, (directory / name).string() << ": cannot write");
    return out;
  };
  {
    auto out = open("nodes.tsv");
    out << "node_type\tlocal_id\ttext\n";
    for (std::int32_t t = 0; t < graph.num_node_types(); ++t)
      for (NodeId i = 0; i < graph.node_count(t); ++i)
        out << graph.node_type_name(t) << '\t' << i << '\t' << sanitize(graph.text({t, i}))
            << '\n';
  }
  {
    auto out = open("edges.tsv");
    out << "src_type\tsrc_id\trelation\tdst_type\tdst_id\n";
    for (std::int32_t r = 0; r < graph.num_relations(); ++r) {
      const auto& rel = graph.relation(r);
      for (const auto& e : graph.edges(r))
        out << graph.node_type_name(rel.src_type) << '\t' << e.src << '\t' << rel.name << '\t'
            << graph.node_type_name(rel.dst_type) << '\t' << e.dst << '\n';
    }
  }
  {
    auto out = open("node_labels.tsv");
    out << "node_type\tlocal_id\tclass_id\tsplit\n";
    for (std::int32_t t = 0; t < graph.num_node_types(); ++t)
      for (NodeId i = 0; i < graph.node_count(t); ++i)
        if (auto label = graph.node_label({t, i}))
          out << graph.node_type_name(t) << '\t' << i << '\t' << *label << '\t'
              << split_name(graph.node_split({t, i})) << '\n';
  }
  {
    auto out = open("edge_labels.tsv");
    out << "src_type\tsrc_id\trelation\tdst_type\tdst_id\tclass_id\tsplit\n";
    for (const auto& l : graph.edge_labels()) {
      const auto& rel = graph.relation(l.relation);
      out << graph.node_type_name(rel.src_type) << '\t' << l.edge.src << '\t' << rel.name
          << '\t' << graph.node_type_name(rel.dst_type) << '\t' << l.edge.dst << '\t'
          << l.class_id << '\t' << split_name(l.split) << '\n';
    }
  }
}

}  // namespace lmgnn
