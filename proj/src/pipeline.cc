#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>

#include "lmgnn/checkpoint.hpp"
#include "lmgnn/errors.hpp"
#include "lmgnn/ops.hpp"
#include "lmgnn/pipeline.hpp"

namespace lmgnn {
namespace {

// Independent per-(seed, step, purpose) streams; identical on any thread.
std::uint64_t mix_seed(std::uint64_t seed, std::int64_t step, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(step) + 1) +
                    0xbf58476d1ce4e5b9ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

enum Salt : std::uint64_t { kTargets, kNegatives, kNeighbors, kSplit, kMlm };

bool is_encoder_stage(StageKind kind) { return kind == StageKind::kPreFineTuneLM; }

std::vector<std::size_t> sample_without_replacement(std::size_t pool, std::size_t count,
                                                    std::mt19937_64& rng) {
  std::vector<std::size_t> idx(pool);
  std::iota(idx.begin(), idx.end(), 0);
  count = std::min(count, pool);
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> d(i, pool - 1);
    std::swap(idx[i], idx[d(rng)]);
  }
  idx.resize(count);
  return idx;
}

// Disables gradients on parameters outside the stage's groups for its lifetime.
class FreezeGuard {
 public:
  FreezeGuard(const LmGnnModel& model, const std::vector<ParamGroup>& trainable) {
    for (auto g : {ParamGroup::kLm, ParamGroup::kGnn, ParamGroup::kHeads}) {
      if (std::find(trainable.begin(), trainable.end(), g) != trainable.end()) continue;
      for (auto& p : model.params(g)) {
        frozen_.push_back(p.tensor);
        p.tensor.set_requires_grad(false);
      }
    }
  }
  ~FreezeGuard() {
    for (auto& t : frozen_) t.set_requires_grad(true);
  }
  FreezeGuard(const FreezeGuard&) = delete;
  FreezeGuard& operator=(const FreezeGuard&) = delete;

 private:
  std::vector<Tensor> frozen_;
};

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

}  // namespace

std::string stage_name(StageKind kind) {
  switch (kind) {
    case StageKind::kPreFineTuneLM: return "PreFineTuneLM";
    case StageKind::kWarmStartGNN: return "WarmStartGNN";
    case StageKind::kEndToEnd: return "EndToEnd";
    case StageKind::kHeadOnly: return "HeadOnly";
  }
  return "?";
}

StageKind parse_stage(const std::string& name) {
  for (auto k : {StageKind::kPreFineTuneLM, StageKind::kWarmStartGNN, StageKind::kEndToEnd,
                 StageKind::kHeadOnly})
    if (name == stage_name(k)) return k;
  throw ConfigError("unknown stage '" + name +
                    "' (expected PreFineTuneLM, WarmStartGNN, EndToEnd or HeadOnly)");
}

std::vector<ParamGroup> trainable_groups(StageKind kind) {
  switch (kind) {
    case StageKind::kPreFineTuneLM: return {ParamGroup::kLm};
    case StageKind::kWarmStartGNN: return {ParamGroup::kGnn, ParamGroup::kHeads};
    case StageKind::kEndToEnd: return {ParamGroup::kLm, ParamGroup::kGnn, ParamGroup::kHeads};
    case StageKind::kHeadOnly: return {ParamGroup::kHeads};
  }
  return {};
}

TrainInferenceSplit split_train_inference(std::span<const NodeRef> nodes, const NodeBudget& budget,
                                          std::uint64_t seed) {
  LMGNN_CHECK(budget.train_nodes_per_batch > 0 && budget.inference_batch_size > 0, ContractError,
              "node budget and inference sub-batch size must be positive");
  std::mt19937_64 rng(seed);
  auto chosen = sample_without_replacement(nodes.size(), budget.train_nodes_per_batch, rng);
  std::sort(chosen.begin(), chosen.end());
  TrainInferenceSplit out;
  std::vector<char> is_train(nodes.size(), 0);
  for (auto i : chosen) {
    is_train[i] = 1;
    out.train.push_back(nodes[i]);
  }
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (is_train[i]) continue;
    if (out.inference.empty() || out.inference.back().size() == budget.inference_batch_size)
      out.inference.emplace_back();
    out.inference.back().push_back(nodes[i]);
  }
  return out;
}

TrainInferenceSplit split_train_inference(const EgoBatch& batch, const LmGnnModel& model,
                                          const NodeBudget& budget, std::uint64_t seed) {
  std::vector<NodeRef> texted;
  for (const auto& n : batch.input_nodes())
    if (model.texted(n.type)) texted.push_back(n);
  return split_train_inference(texted, budget, seed);
}

std::vector<double> mlm_pretrain(LmGnnModel& model, const HeteroGraph& graph, std::int64_t steps,
                                 std::size_t batch_size, double learning_rate, std::uint64_t seed) {
  std::vector<double> losses;
  if (steps <= 0) return losses;
  // Nodes grouped by the encoder that reads them.
  std::vector<std::vector<NodeRef>> corpus(model.encoders().size());
  for (NodeId g = 0; g < graph.total_nodes(); ++g) {
    const NodeRef n = graph.node_ref(g);
    if (!model.texted(n.type)) continue;
    const TextEncoder* enc = &model.encoder_for(n.type);
    for (std::size_t e = 0; e < model.encoders().size(); ++e)
      if (&model.encoders()[e] == enc) corpus[e].push_back(n);
  }
  for (std::size_t e = 0; e < corpus.size(); ++e) {
    if (corpus[e].empty()) continue;
    std::vector<Tensor> params;
    for (auto& p : model.encoders()[e].params("")) params.push_back(p.tensor);
    Adam adam(params, {.learning_rate = learning_rate});
    for (std::int64_t s = 0; s < steps; ++s) {
      std::mt19937_64 rng(mix_seed(seed, s, kMlm + e));
      std::vector<NodeRef> nodes;
      for (auto i : sample_without_replacement(corpus[e].size(), batch_size, rng))
        nodes.push_back(corpus[e][i]);
      const auto result = mlm_pretrain_step(model.encoders()[e], model.token_batch(nodes), 0.15,
                                            mix_seed(seed, s, kMlm + 100 + e));
      if (!result.no_mask) adam.step();
      adam.zero_grad();
      losses.push_back(result.loss);
    }
  }
  return losses;
}

struct Trainer::Prepared {
  std::vector<NodeRef> nodes;      // node task targets
  std::vector<LabeledEdge> edges;  // edge task targets
  TripletBatch triplets;           // link task and pre-fine-tuning
  EgoBatch ego;                    // GNN stages
  std::uint64_t split_seed = 0;
};

Trainer::Trainer(LmGnnModel& model, const HeteroGraph& graph, TrainConfig config)
    : model_(model),
      graph_(graph),
      config_(std::move(config)),
      mp_graph_(message_graph(graph, config_.task)),
      cache_(config_.cache_capacity, config_.cache_staleness) {
  for (std::int32_t r = 0; r < mp_graph_.num_relations(); ++r) {
    const auto& rel = mp_graph_.relation(r);
    if (!model_.texted(rel.src_type) || !model_.texted(rel.dst_type)) continue;
    for (const auto& e : mp_graph_.edges(r)) pretrain_pool_.emplace_back(r, e);
  }
  if (config_.target_mode == TargetMode::kPartitionLocal)
    partitions_ = assign_partitions(mp_graph_, config_.leaf_partitions, config_.seed);
  if (!config_.out_dir.empty()) {
    std::filesystem::create_directories(config_.out_dir);
    metrics_file_ = std::make_unique<std::ofstream>(config_.out_dir / "metrics.jsonl", std::ios::trunc);
    LMGNN_CHECK(metrics_file_->good(), ConfigError,
                (config_.out_dir / "metrics.jsonl").string() << ": cannot write");
  }
}

void Trainer::validate_plan() const {
  LMGNN_CHECK(!config_.stages.empty(), ConfigError, "stage plan is empty");
  LMGNN_CHECK(config_.batch_size > 0, ConfigError, "batch_size must be positive");
  LMGNN_CHECK(config_.negatives_k > 0, ConfigError, "negatives_k must be positive");
  LMGNN_CHECK(model_.gnn().layers().size() == static_cast<std::size_t>(config_.sampler.num_layers),
              ConfigError, "sampler depth " << config_.sampler.num_layers << " differs from GNN depth "
                                            << model_.gnn().layers().size());
  LMGNN_CHECK(model_.config().include_reverse == config_.sampler.include_reverse, ConfigError,
              "sampler and GNN disagree on reverse relations");
  for (const auto& s : config_.stages) {
    LMGNN_CHECK(s.epochs >= 0, ConfigError, "negative epoch count for " << stage_name(s.kind));
    if (s.kind == StageKind::kPreFineTuneLM)
      LMGNN_CHECK(!pretrain_pool_.empty(), ConfigError,
                  "pre-fine-tuning needs edges between texted node types");
  }
  switch (config_.task) {
    case Task::kLink:
      LMGNN_CHECK(graph_.labeled_relation().has_value() && !graph_.labeled_edges(Split::kTrain).empty(),
                  ConfigError, "link task needs train-split labeled edges");
      break;
    case Task::kNode:
      LMGNN_CHECK(!graph_.labeled_nodes(Split::kTrain).empty(), ConfigError,
                  "node task needs train-split labeled nodes");
      LMGNN_CHECK(model_.node_head().classes() == static_cast<std::size_t>(graph_.num_node_classes()),
                  ConfigError, "node head width differs from the graph's class count");
      break;
    case Task::kEdge:
      LMGNN_CHECK(!graph_.labeled_edges(Split::kTrain).empty(), ConfigError,
                  "edge task needs train-split labeled edges");
      LMGNN_CHECK(model_.edge_head().classes() == static_cast<std::size_t>(graph_.num_edge_classes()),
                  ConfigError, "edge head width differs from the graph's class count");
      break;
  }
  // Every stage but pre-fine-tuning reads the GNN output; its input width
  // must be the encoder width.
  LMGNN_CHECK(model_.gnn().config().in_dim == model_.text_dim(), ConfigError,
              "GNN input width " << model_.gnn().config().in_dim << " differs from encoder width "
                                 << model_.text_dim());
}

std::size_t Trainer::steps_per_epoch(StageKind kind) const {
  std::size_t count = 0;
  if (is_encoder_stage(kind)) {
    count = pretrain_pool_.size();
  } else if (config_.task == Task::kNode) {
    count = graph_.labeled_nodes(Split::kTrain).size();
  } else {
    count = graph_.labeled_edges(Split::kTrain).size();
  }
  return std::max<std::size_t>(1, (count + config_.batch_size - 1) / config_.batch_size);
}

Trainer::Prepared Trainer::prepare(StageKind kind, std::int64_t step) const {
  Prepared p;
  p.split_seed = mix_seed(config_.seed, step, kSplit);
  const auto target_seed = mix_seed(config_.seed, step, kTargets);
  auto make_triplets = [&](std::vector<Triplet> positives, NegativeMode mode) {
    const auto neg_seed = mix_seed(config_.seed, step, kNegatives);
    // Occasional false negatives are tolerated; filtering would break the 3n bound.
    return mode == NegativeMode::kJoint
               ? corrupt_joint(positives, config_.negatives_k, mp_graph_, neg_seed)
               : corrupt_independent(positives, config_.negatives_k, mp_graph_, neg_seed);
  };
  auto triplet_of = [&](std::int32_t r, const Edge& e) {
    const auto& rel = mp_graph_.relation(r);
    return Triplet{{rel.src_type, e.src}, r, {rel.dst_type, e.dst}};
  };

  if (is_encoder_stage(kind)) {
    std::mt19937_64 rng(target_seed);
    std::vector<Triplet> positives;
    for (auto i : sample_without_replacement(pretrain_pool_.size(), config_.batch_size, rng))
      positives.push_back(triplet_of(pretrain_pool_[i].first, pretrain_pool_[i].second));
    p.triplets = make_triplets(std::move(positives), NegativeMode::kJoint);
    return p;
  }

  std::vector<NodeRef> targets;
  EdgeExclusion exclude;
  switch (config_.task) {
    case Task::kNode: {
      p.nodes = sample_target_nodes(graph_, config_.batch_size, config_.target_mode,
                                    partitions_ ? &*partitions_ : nullptr, target_seed)
                    .nodes;
      targets = p.nodes;
      break;
    }
    case Task::kEdge: {
      p.edges = sample_target_edges(graph_, config_.batch_size, config_.target_mode,
                                    partitions_ ? &*partitions_ : nullptr, target_seed)
                    .edges;
      for (const auto& e : p.edges) {
        const auto t = triplet_of(e.relation, e.edge);
        targets.push_back(t.head);
        targets.push_back(t.tail);
      }
      break;
    }
    case Task::kLink: {
      const auto sample = sample_target_edges(graph_, config_.batch_size, config_.target_mode,
                                              partitions_ ? &*partitions_ : nullptr, target_seed);
      std::vector<Triplet> positives;
      for (const auto& e : sample.edges) {
        positives.push_back(triplet_of(e.relation, e.edge));
        // The edges being predicted must not carry messages.
        exclude.add(e.relation, e.edge);
      }
      exclude.finalize();
      p.triplets = make_triplets(std::move(positives), config_.negative_mode);
      targets = p.triplets.distinct_endpoints;
      break;
    }
  }
  SamplerConfig sampler = config_.sampler;
  sampler.dedup = true;
  p.ego = sample_neighbors(mp_graph_, targets, sampler, mix_seed(config_.seed, step, kNeighbors),
                           exclude.empty() ? nullptr : &exclude);
  return p;
}

double Trainer::train_step(StageKind kind, const Prepared& batch, Adam& optimizer,
                           const Tensor* frozen_text, std::int64_t step, StepRecord& record) {
  const CacheStats before = cache_.stats();
  Tape tape;
  TapeScope scope(tape);
  Tensor loss;

  // Rows of `table` (aligned with `nodes`) for the given node list.
  auto pick = [](const Tensor& table, const std::vector<NodeRef>& nodes,
                 std::span<const NodeRef> wanted) {
    std::unordered_map<NodeRef, std::int64_t, NodeRefHash> row_of;
    for (std::size_t i = 0; i < nodes.size(); ++i) row_of.emplace(nodes[i], static_cast<std::int64_t>(i));
    std::vector<std::int64_t> rows;
    rows.reserve(wanted.size());
    for (const auto& n : wanted) rows.push_back(row_of.at(n));
    return gather_rows(table, rows);
  };
  auto link_scores = [&](const Tensor& table, const std::vector<NodeRef>& nodes,
                         const DistMult& decoder) {
    std::vector<NodeRef> heads, tails;
    std::vector<std::int32_t> rels;
    for (const auto& t : batch.triplets.triplets) {
      heads.push_back(t.head);
      tails.push_back(t.tail);
      rels.push_back(t.relation);
    }
    return decoder.score(pick(table, nodes, heads), rels, pick(table, nodes, tails));
  };

  if (is_encoder_stage(kind)) {
    const auto& nodes = batch.triplets.distinct_endpoints;
    const Tensor cls = model_.encode(nodes);
    loss = link_loss(batch.triplets.labels, link_scores(cls, nodes, model_.lm_decoder()));
    record.unique_nodes = nodes.size();
  } else {
    const auto& inputs = batch.ego.input_nodes();
    std::vector<NodeRef> feature_nodes;
    std::vector<Tensor> parts;
    if (frozen_text != nullptr) {
      std::vector<std::int64_t> rows;
      for (const auto& n : inputs)
        if (model_.texted(n.type)) {
          feature_nodes.push_back(n);
          rows.push_back(graph_.global_id(n));
        }
      if (!rows.empty()) parts.push_back(gather_rows(*frozen_text, rows));
    } else {
      const auto split = split_train_inference(batch.ego, model_, config_.budget, batch.split_seed);
      if (!split.train.empty()) {
        Tensor live = model_.encode(split.train);
        if (config_.use_cache)
          for (std::size_t i = 0; i < split.train.size(); ++i)
            cache_.put(split.train[i], live.data().subspan(i * live.cols(), live.cols()), step);
        parts.push_back(live);
        feature_nodes.insert(feature_nodes.end(), split.train.begin(), split.train.end());
      }
      const EncodeFn encode = [this](std::span<const NodeRef> nodes) { return model_.encode(nodes); };
      for (const auto& sub : split.inference) {
        if (config_.use_cache) {
          parts.push_back(cache_get_or_encode(cache_, sub, step, encode));
        } else {
          NoGradScope no_grad;
          parts.push_back(model_.encode(sub).detach());
        }
        feature_nodes.insert(feature_nodes.end(), sub.begin(), sub.end());
      }
    }
    // Featureless types read their learned input tables.
    std::map<std::int32_t, std::vector<NodeRef>> featureless;
    for (const auto& n : inputs)
      if (!model_.texted(n.type)) featureless[n.type].push_back(n);
    for (const auto& [type, nodes] : featureless) {
      std::vector<std::int64_t> locals;
      for (const auto& n : nodes) locals.push_back(n.local);
      parts.push_back(model_.gnn().input_rows(type, locals));
      feature_nodes.insert(feature_nodes.end(), nodes.begin(), nodes.end());
    }
    const Tensor h = gnn_forward(model_.gnn(), batch.ego,
                                 NodeFeatures{feature_nodes, parts.size() == 1 ? parts[0] : concat_rows(parts)});
    const auto& targets = batch.ego.targets;
    switch (config_.task) {
      case Task::kLink:
        loss = link_loss(batch.triplets.labels, link_scores(h, targets, model_.link_decoder()));
        break;
      case Task::kNode: {
        std::vector<std::int64_t> labels;
        for (const auto& n : batch.nodes) labels.push_back(*graph_.node_label(n));
        loss = node_loss(model_.node_head(), pick(h, targets, batch.nodes), labels);
        break;
      }
      case Task::kEdge: {
        std::vector<NodeRef> heads, tails;
        std::vector<std::int64_t> labels;
        for (const auto& e : batch.edges) {
          const auto& rel = graph_.relation(e.relation);
          heads.push_back({rel.src_type, e.edge.src});
          tails.push_back({rel.dst_type, e.edge.dst});
          labels.push_back(e.class_id);
        }
        loss = edge_loss(model_.edge_head(), pick(h, targets, heads), pick(h, targets, tails), labels);
        break;
      }
    }
    record.unique_nodes = batch.ego.unique_nodes();
  }

  const double value = loss.item();
  if (!std::isfinite(value)) {
    std::ostringstream snap;
    snap << "non-finite loss " << value << " in stage " << stage_name(kind) << " at step " << step
         << "; triplets=" << batch.triplets.triplets.size() << " nodes=" << batch.nodes.size()
         << " edges=" << batch.edges.size() << " unique_nodes=" << record.unique_nodes
         << " lr=" << config_.learning_rate;
    if (!batch.triplets.triplets.empty()) {
      const auto& t = batch.triplets.triplets.front();
      snap << " first_triplet=(" << t.head.type << ":" << t.head.local << " r" << t.relation << " "
           << t.tail.type << ":" << t.tail.local << ")";
    }
    throw NumericalError(snap.str());
  }
  if (loss.requires_grad()) tape.backward(loss);
  optimizer.step();
  optimizer.zero_grad();
  for (auto& p : model_.all_params()) p.tensor.zero_grad();

  const CacheStats after = cache_.stats();
  const auto hits = after.hits - before.hits, misses = after.misses - before.misses;
  record.cache_hit_rate = hits + misses ? static_cast<double>(hits) / static_cast<double>(hits + misses) : 0.0;
  return value;
}

void Trainer::log(const nlohmann::json& record) {
  if (metrics_file_) {
    *metrics_file_ << record.dump() << '\n';
    metrics_file_->flush();
  }
}

nlohmann::json Trainer::checkpoint_meta(StageKind kind) const {
  std::vector<NodeId> counts(graph_.node_counts().begin(), graph_.node_counts().end());
  return {{"task", task_name(config_.task)},
          {"mode", is_encoder_stage(kind) ? "encoder" : "gnn"},
          {"stage", stage_name(kind)},
          {"model", to_json(model_.config())},
          {"node_counts", counts},
          {"num_relations", graph_.num_relations()},
          {"num_node_classes", graph_.num_node_classes()},
          {"num_edge_classes", graph_.num_edge_classes()},
          {"fanouts", config_.sampler.fanouts},
          {"seed", config_.seed},
          {"inference_batch_size", config_.budget.inference_batch_size}};
}

EvalReport Trainer::evaluate(Split split, bool encoder_mode) const {
  const Tensor text = encode_all_texts(model_, graph_, config_.budget.inference_batch_size);
  if (encoder_mode) {
    LMGNN_CHECK(config_.task == Task::kLink || graph_.labeled_relation().has_value(), ContractError,
                "encoder-mode evaluation needs labeled edges");
    return evaluate_link(graph_, text, model_.lm_decoder(), split, {.seed = config_.seed});
  }
  const Tensor h = infer_embeddings(model_, mp_graph_, text);
  switch (config_.task) {
    case Task::kLink: return evaluate_link(graph_, h, model_.link_decoder(), split, {.seed = config_.seed});
    case Task::kNode: return evaluate_node(graph_, h, model_.node_head(), split);
    case Task::kEdge: return evaluate_edge(graph_, h, model_.edge_head(), split);
  }
  throw ContractError("unknown task");
}

StageResult Trainer::run_stage(const StageConfig& stage, std::size_t stage_index) {
  const StageKind kind = stage.kind;
  StageResult result;
  result.kind = kind;
  const auto groups = trainable_groups(kind);
  FreezeGuard freeze(model_, groups);

  if (!is_encoder_stage(kind) && config_.task == Task::kLink && ran_pretrain_ &&
      config_.warm_decoder && !warm_decoder_applied_ &&
      model_.lm_decoder().relations().shape() == model_.link_decoder().relations().shape()) {
    Tensor dst = model_.link_decoder().relations();
    const auto src = model_.lm_decoder().relations().data();
    std::copy(src.begin(), src.end(), dst.mutable_data().begin());
    warm_decoder_applied_ = true;
  }

  std::vector<Tensor> trainable;
  for (auto g : groups)
    for (auto& p : model_.params(g)) trainable.push_back(p.tensor);
  Adam optimizer(trainable, {.learning_rate = config_.learning_rate});

  const bool lm_trainable = std::find(groups.begin(), groups.end(), ParamGroup::kLm) != groups.end();
  // With the encoder frozen, every text embedding is computed once per stage.
  std::optional<Tensor> frozen_text;
  if (!is_encoder_stage(kind) && !lm_trainable)
    frozen_text = encode_all_texts(model_, graph_, config_.budget.inference_batch_size);

  // Validation is possible in encoder mode only when the labeled relation
  // joins texted types.
  bool can_validate = config_.validate;
  if (is_encoder_stage(kind)) {
    const auto rel = graph_.labeled_relation();
    can_validate = can_validate && rel && model_.texted(graph_.relation(*rel).src_type) &&
                   model_.texted(graph_.relation(*rel).dst_type) &&
                   !graph_.labeled_edges(Split::kValid).empty();
  } else if (config_.task == Task::kNode) {
    can_validate = can_validate && !graph_.labeled_nodes(Split::kValid).empty();
  } else {
    can_validate = can_validate && !graph_.labeled_edges(Split::kValid).empty();
  }

  const ParamList trainable_named = [&] {
    ParamList out;
    for (auto g : groups)
      for (auto& p : model_.params(g)) out.push_back(p);
    return out;
  }();
  std::vector<std::vector<double>> best_snapshot;

  const std::size_t per_epoch = steps_per_epoch(kind);
  const CacheStats stage_start = cache_.stats();
  for (std::int32_t epoch = 1; epoch <= stage.epochs; ++epoch) {
    std::future<Prepared> next;
    for (std::size_t s = 0; s < per_epoch; ++s) {
      const auto start = std::chrono::steady_clock::now();
      const std::int64_t step = global_step_;
      Prepared batch = next.valid() ? next.get() : prepare(kind, step);
      if (config_.prefetch && s + 1 < per_epoch)
        next = std::async(std::launch::async, [this, kind, step] { return prepare(kind, step + 1); });
      StepRecord record;
      record.stage = stage_name(kind);
      record.step = step;
      record.loss = train_step(kind, batch, optimizer, frozen_text ? &*frozen_text : nullptr, step, record);
      ++global_step_;
      record.elapsed_ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
      log({{"stage", record.stage},
           {"step", record.step},
           {"loss", record.loss},
           {"cache_hit_rate", record.cache_hit_rate},
           {"unique_nodes", record.unique_nodes},
           {"elapsed_ms", record.elapsed_ms}});
      if (on_step) on_step(record);
      result.steps.push_back(std::move(record));
    }
    if (!can_validate) continue;
    const EvalReport report = evaluate(Split::kValid, is_encoder_stage(kind));
    const std::string metric = is_encoder_stage(kind) ? "mrr" : primary_metric(config_.task);
    const double value = report.metrics.at(metric);
    result.epochs.push_back({stage_name(kind), epoch, Split::kValid, metric, value});
    log({{"stage", stage_name(kind)},
         {"epoch", epoch},
         {"split", "valid"},
         {"metric_name", metric},
         {"value", value}});
    if (!result.best_metric || value > *result.best_metric) {
      result.best_metric = value;
      result.best_epoch = epoch;
      best_snapshot = snapshot(trainable_named);
    }
  }
  if (!best_snapshot.empty()) restore(trainable_named, best_snapshot);
  if (is_encoder_stage(kind)) ran_pretrain_ = true;

  const CacheStats& now = cache_.stats();
  result.cache = {now.hits - stage_start.hits, now.misses - stage_start.misses,
                  now.evictions - stage_start.evictions};
  if (!config_.out_dir.empty()) {
    result.checkpoint = config_.out_dir / ("stage_" + std::to_string(stage_index) + "_" + lower(stage_name(kind)));
    save_checkpoint(result.checkpoint, model_.all_params(), model_.vocab(), checkpoint_meta(kind));
  }
  return result;
}

std::vector<StageResult> Trainer::run() {
  validate_plan();
  std::vector<StageResult> results;
  const bool final_encoder = is_encoder_stage(config_.stages.back().kind);
  std::optional<double> best_value;
  std::vector<std::vector<double>> best_params;
  StageKind best_kind = config_.stages.back().kind;
  const ParamList all = model_.all_params();
  for (std::size_t i = 0; i < config_.stages.size(); ++i) {
    results.push_back(run_stage(config_.stages[i], i));
    const auto& r = results.back();
    if (is_encoder_stage(r.kind) != final_encoder) continue;
    // Unvalidated stages compete only when nothing validated did.
    const bool better = r.best_metric ? (!best_value || *r.best_metric >= *best_value) : !best_value;
    if (better) {
      if (r.best_metric) best_value = r.best_metric;
      best_params = snapshot(all);
      best_kind = r.kind;
    }
  }
  if (!best_params.empty()) restore(all, best_params);
  if (!config_.out_dir.empty())
    save_checkpoint(config_.out_dir / "best", all, model_.vocab(), checkpoint_meta(best_kind));
  return results;
}

}  // namespace lmgnn
