#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "lmgnn/decoders.hpp"
#include "lmgnn/gnn.hpp"
#include "lmgnn/ops.hpp"
#include "lmgnn/graph.hpp"
#include "lmgnn/tensor.hpp"

namespace lmgnn::testing {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  // Gradients at the worst coordinate.
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

// Central differences (step eps) against the tape gradient of loss_fn()
// with respect to `param`. At most max_coords coordinates are probed
// (0 = all), chosen at random when fewer than all. Relative error is
// |a - n| / max(|a|, |n|, floor).
inline GradCheckResult grad_check(Tensor param, const std::function<Tensor()>& loss_fn,
                                  double eps = 1e-3, std::size_t max_coords = 0,
                                  std::uint64_t seed = 0, double floor = 1e-4) {
  param.zero_grad();
  {
    Tape tape;
    TapeScope scope(tape);
    Tensor loss = loss_fn();
    tape.backward(loss);
  }
  std::vector<double> analytic(param.numel(), 0.0);
  if (param.has_grad()) std::copy(param.grad().begin(), param.grad().end(), analytic.begin());
  param.zero_grad();

  std::vector<std::size_t> coords(param.numel());
  std::iota(coords.begin(), coords.end(), 0);
  if (max_coords != 0 && max_coords < coords.size()) {
    std::mt19937_64 rng(seed);
    std::shuffle(coords.begin(), coords.end(), rng);
    coords.resize(max_coords);
  }
  GradCheckResult result;
  NoGradScope no_grad;
  auto data = param.mutable_data();
  for (auto i : coords) {
    const double saved = data[i];
    data[i] = saved + eps;
    const double up = loss_fn().item();
    data[i] = saved - eps;
    const double down = loss_fn().item();
    data[i] = saved;
    const double numeric = (up - down) / (2 * eps);
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), floor});
    const double rel = std::abs(analytic[i] - numeric) / denom;
    if (rel > result.max_rel_error) {
      result.max_rel_error = rel;
      result.worst_analytic = analytic[i];
      result.worst_numeric = numeric;
    }
    ++result.checked;
  }
  return result;
}

// Random heterogeneous graph with two node types and up to three relations.
// Texts are set on type 0 only when `texted` is true.
inline HeteroGraph random_graph(std::uint64_t seed, NodeId n0, NodeId n1, double density,
                                bool texted = false) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution keep(density);
  std::vector<RelationType> rels = {{0, "a", 1}, {1, "b", 1}, {0, "c", 0}};
  std::vector<std::vector<Edge>> edges(rels.size());
  const std::vector<NodeId> counts = {n0, n1};
  for (std::size_t r = 0; r < rels.size(); ++r)
    for (NodeId s = 0; s < counts[static_cast<std::size_t>(rels[r].src_type)]; ++s)
      for (NodeId d = 0; d < counts[static_cast<std::size_t>(rels[r].dst_type)]; ++d)
        if (keep(rng)) edges[r].push_back({s, d});
  HeteroGraph g({"t0", "t1"}, counts, rels, edges);
  if (texted) {
    std::vector<std::vector<std::string>> texts(2);
    for (NodeId i = 0; i < n0; ++i) texts[0].push_back("w" + std::to_string(i % 5) + " x");
    texts[1].assign(static_cast<std::size_t>(n1), "");
    g.set_texts(std::move(texts));
  }
  return g;
}

// Query-product toy graph: queries "Running shoes" and "Socks"; products
// "Nike running shoes", "Wool socks", "Trail shoes".
inline HeteroGraph query_product_fixture() {
  std::vector<RelationType> rels = {{0, "purchase", 1}};
  std::vector<std::vector<Edge>> edges = {{{0, 0}, {0, 2}, {1, 1}}};
  HeteroGraph g({"query", "product"}, {2, 3}, rels, edges);
  g.set_texts({{"Running shoes", "Socks"}, {"Nike running shoes", "Wool socks", "Trail shoes"}});
  return g;
}

// Three users, three items, one "likes" relation whose edges are all
// labeled: two train, one valid, two test.
inline HeteroGraph six_node_fixture() {
  std::vector<RelationType> rels = {{0, "likes", 1}};
  std::vector<std::vector<Edge>> edges = {{{0, 0}, {0, 1}, {1, 1}, {2, 2}, {1, 0}}};
  HeteroGraph g({"user", "item"}, {3, 3}, rels, edges);
  g.set_edge_labels({{0, {0, 0}, 0, Split::kTrain},
                     {0, {0, 1}, 0, Split::kTrain},
                     {0, {1, 1}, 0, Split::kValid},
                     {0, {2, 2}, 0, Split::kTest},
                     {0, {1, 0}, 0, Split::kTest}});
  return g;
}

// Filtered MRR by sorting every candidate of every query: for each labeled
// edge of `split`, replace the tail (then the head) by each node of its type
// that forms no stored edge, sort all scores descending with the positive
// placed after its ties, and read off the positive's position.
inline double brute_force_link_mrr(const HeteroGraph& g, const Tensor& emb, const DistMult& dm,
                                   Split split) {
  const std::int32_t r = *g.labeled_relation();
  const auto& rel = g.relation(r);
  const std::size_t d = emb.cols();
  auto score = [&](NodeId h, NodeId t) {
    double s = 0;
    const auto hg = static_cast<std::size_t>(g.global_id({rel.src_type, h}));
    const auto tg = static_cast<std::size_t>(g.global_id({rel.dst_type, t}));
    for (std::size_t i = 0; i < d; ++i)
      s += emb.at(hg, i) * dm.relations().at(static_cast<std::size_t>(r), i) * emb.at(tg, i);
    return s;
  };
  double total = 0;
  std::size_t queries = 0;
  for (const auto& le : g.labeled_edges(split)) {
    const NodeId h = le.edge.src, t = le.edge.dst;
    for (bool corrupt_head : {false, true}) {
      std::vector<std::pair<double, int>> ranked = {{score(h, t), 1}};
      const std::int32_t type = corrupt_head ? rel.src_type : rel.dst_type;
      for (NodeId c = 0; c < g.node_count(type); ++c) {
        const NodeId hh = corrupt_head ? c : h, tt = corrupt_head ? t : c;
        if (c == (corrupt_head ? h : t)) continue;
        bool stored = false;
        for (const Edge& e : g.edges(r)) stored = stored || (e.src == hh && e.dst == tt);
        if (!stored) ranked.push_back({score(hh, tt), 0});
      }
      if (ranked.size() == 1) continue;
      std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
      });
      for (std::size_t i = 0; i < ranked.size(); ++i)
        if (ranked[i].second == 1) total += 1.0 / static_cast<double>(i + 1);
      ++queries;
    }
  }
  return total / static_cast<double>(queries);
}

using Mat = std::vector<std::vector<double>>;

inline Mat zeros(std::size_t r, std::size_t c) { return Mat(r, std::vector<double>(c, 0.0)); }

// row * W
inline std::vector<double> times(const std::vector<double>& row, const Tensor& w) {
  std::vector<double> out(w.cols(), 0.0);
  for (std::size_t i = 0; i < w.rows(); ++i)
    for (std::size_t j = 0; j < w.cols(); ++j) out[j] += row[i] * w.at(i, j);
  return out;
}

// Full-graph layer-by-layer evaluation over every node (rows by global id).
inline Mat dense_forward(const RgcnStack& stack, const HeteroGraph& g, bool rev) {
  const auto rels = g.message_relations(rev);
  const auto n = static_cast<std::size_t>(g.total_nodes());
  Mat h;
  for (std::size_t i = 0; i < n; ++i) {
    NodeRef ref = g.node_ref(static_cast<NodeId>(i));
    const std::vector<std::int64_t> idx = {ref.local};
    Tensor row = stack.input_rows(ref.type, idx);
    h.emplace_back(row.data().begin(), row.data().end());
  }
  const auto& layers = stack.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    Mat next = zeros(n, layer.w_self.cols());
    for (std::size_t i = 0; i < n; ++i) {
      NodeRef ref = g.node_ref(static_cast<NodeId>(i));
      next[i] = times(h[i], layer.w_self);
      for (std::size_t m = 0; m < rels.size(); ++m) {
        if (rels[m].target_type != ref.type) continue;
        auto nb = g.neighbors(rels[m], ref.local);
        if (nb.empty()) continue;
        std::vector<double> acc(h[0].size(), 0.0);
        for (NodeId v : nb) {
          const auto j = static_cast<std::size_t>(g.global_id({rels[m].neighbor_type, v}));
          for (std::size_t c = 0; c < acc.size(); ++c) acc[c] += h[j][c];
        }
        if (layer.aggregation == Aggregation::kMean)
          for (double& a : acc) a /= static_cast<double>(nb.size());
        auto msg = times(acc, layer.w_rel[m]);
        for (std::size_t c = 0; c < msg.size(); ++c) next[i][c] += msg[c];
      }
      const bool last = l + 1 == layers.size();
      if (!last || stack.config().activate_last)
        for (double& x : next[i]) x = std::max(0.0, x);
    }
    h = std::move(next);
  }
  return h;
}

inline Tensor inputs_for(const RgcnStack& stack, const EgoBatch& b) {
  std::vector<Tensor> rows;
  for (const NodeRef& n : b.input_nodes()) {
    const std::vector<std::int64_t> idx = {n.local};
    rows.push_back(stack.input_rows(n.type, idx));
  }
  return concat_rows(rows);
}

}  // namespace lmgnn::testing
