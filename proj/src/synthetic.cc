#include <algorithm>
#include <numeric>
#include <random>

#include "lmgnn/errors.hpp"
#include "lmgnn/graph.hpp"

namespace lmgnn {
namespace {

// Assigns 60/10/30 train/valid/test over `count` items in a seeded order.
std::vector<Split> split_60_10_30(std::size_t count, std::mt19937_64& rng) {
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<Split> out(count);
  const std::size_t n_train = count * 6 / 10;
  const std::size_t n_valid = count / 10;
  for (std::size_t i = 0; i < count; ++i)
    out[order[i]] = i < n_train ? Split::kTrain
                    : i < n_train + n_valid ? Split::kValid
                                            : Split::kTest;
  return out;
}

}  // namespace

SyntheticGraph generate_synthetic(const SyntheticSpec& spec) {
  LMGNN_CHECK(spec.clusters >= 2, ContractError,
              "need at least 2 clusters for intra > inter, got " << spec.clusters);
  LMGNN_CHECK(spec.nodes_per_type >= spec.clusters, ContractError,
              "nodes_per_type " << spec.nodes_per_type << " < clusters " << spec.clusters);
  for (double p : {spec.intra_probability, spec.inter_probability})
    LMGNN_CHECK(p >= 0.0 && p <= 1.0, ContractError, "probability " << p << " outside [0, 1]");
  LMGNN_CHECK(spec.intra_probability > spec.inter_probability, ContractError,
              "intra probability " << spec.intra_probability
                                   << " must exceed inter probability "
                                   << spec.inter_probability);
  LMGNN_CHECK(spec.tokens_per_node >= 1, ContractError, "tokens_per_node must be >= 1");
  LMGNN_CHECK(spec.topic_share >= 0.0 && spec.topic_share <= 1.0, ContractError,
              "topic_share outside [0, 1]");
  constexpr std::int32_t kTypes = 2;
  LMGNN_CHECK(spec.vocabulary_size >= kTypes * spec.clusters, ContractError,
              "vocabulary of " << spec.vocabulary_size << " cannot hold "
                               << kTypes * spec.clusters << " topic blocks");

  std::mt19937_64 rng(spec.seed);
  const auto n = static_cast<std::size_t>(spec.nodes_per_type);

  SyntheticGraph out;
  out.clusters.resize(kTypes);
  for (auto& assign : out.clusters) {
    assign.resize(n);
    for (std::size_t i = 0; i < n; ++i) assign[i] = static_cast<std::int32_t>(i % static_cast<std::size_t>(spec.clusters));
    std::shuffle(assign.begin(), assign.end(), rng);
  }
  const auto& query_cluster = out.clusters[0];
  const auto& product_cluster = out.clusters[1];

  std::bernoulli_distribution intra(spec.intra_probability);
  std::bernoulli_distribution inter(spec.inter_probability);
  std::vector<Edge> purchase, co_view;
  for (std::size_t q = 0; q < n; ++q)
    for (std::size_t p = 0; p < n; ++p)
      if (query_cluster[q] == product_cluster[p] ? intra(rng) : inter(rng))
        purchase.push_back({static_cast<NodeId>(q), static_cast<NodeId>(p)});
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b)
      if (product_cluster[a] == product_cluster[b] ? intra(rng) : inter(rng))
        co_view.push_back({static_cast<NodeId>(a), static_cast<NodeId>(b)});

  HeteroGraph graph({"query", "product"}, {spec.nodes_per_type, spec.nodes_per_type},
                    {{0, "purchase", 1}, {1, "co_view", 1}},
                    {purchase, co_view});

  // Vocabulary is cut into one topic block per (type, cluster).
  const std::int32_t block = spec.vocabulary_size / (kTypes * spec.clusters);
  std::uniform_int_distribution<std::int32_t> any_token(0, spec.vocabulary_size - 1);
  std::uniform_int_distribution<std::int32_t> in_block(0, block - 1);
  std::bernoulli_distribution on_topic(spec.topic_share);
  std::vector<std::vector<std::string>> texts(kTypes);
  for (std::int32_t t = 0; t < kTypes; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::int32_t base = (t * spec.clusters + out.clusters[static_cast<std::size_t>(t)][i]) * block;
      std::string text;
      for (std::int32_t k = 0; k < spec.tokens_per_node; ++k) {
        const std::int32_t tok = on_topic(rng) ? base + in_block(rng) : any_token(rng);
        if (k) text += ' ';
        text += "tok" + std::to_string(tok);
      }
      texts[static_cast<std::size_t>(t)].push_back(std::move(text));
    }
  }
  graph.set_texts(std::move(texts));

  std::vector<std::vector<std::int32_t>> labels(kTypes);
  std::vector<std::vector<Split>> splits(kTypes);
  const auto node_split = split_60_10_30(kTypes * n, rng);
  for (std::size_t t = 0; t < kTypes; ++t) {
    labels[t] = out.clusters[t];
    splits[t].assign(node_split.begin() + static_cast<std::ptrdiff_t>(t * n),
                     node_split.begin() + static_cast<std::ptrdiff_t>((t + 1) * n));
  }
  graph.set_node_labels(std::move(labels), std::move(splits));

  const auto edge_split = split_60_10_30(purchase.size(), rng);
  std::vector<LabeledEdge> edge_labels;
  edge_labels.reserve(purchase.size());
  for (std::size_t i = 0; i < purchase.size(); ++i) {
    const auto& e = purchase[i];
    const bool same = query_cluster[static_cast<std::size_t>(e.src)] ==
                      product_cluster[static_cast<std::size_t>(e.dst)];
    edge_labels.push_back({0, e, same ? 0 : 1, edge_split[i]});
  }
  graph.set_edge_labels(std::move(edge_labels));
  out.graph = std::move(graph);
  return out;
}

}  // namespace lmgnn
