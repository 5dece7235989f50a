#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "lmgnn/adam.hpp"
#include "lmgnn/cache.hpp"
#include "lmgnn/evaluate.hpp"
#include "lmgnn/model.hpp"
#include "lmgnn/negative_sampling.hpp"
#include "lmgnn/sampling.hpp"

namespace lmgnn {

enum class StageKind { kPreFineTuneLM, kWarmStartGNN, kEndToEnd, kHeadOnly };
std::string stage_name(StageKind kind);
StageKind parse_stage(const std::string& name);  // ConfigError on unknown names
std::vector<ParamGroup> trainable_groups(StageKind kind);

enum class NegativeMode { kIndependent, kJoint };

struct StageConfig {
  StageKind kind = StageKind::kEndToEnd;
  std::int32_t epochs = 1;
};

struct NodeBudget {
  std::size_t train_nodes_per_batch = 64;
  std::size_t inference_batch_size = 256;
};

struct TrainConfig {
  Task task = Task::kLink;
  std::vector<StageConfig> stages;
  std::size_t batch_size = 64;
  SamplerConfig sampler;
  double learning_rate = 1e-3;
  std::size_t negatives_k = 4;
  NegativeMode negative_mode = NegativeMode::kJoint;
  NodeBudget budget;
  // Capacity 0 disables the cache.
  std::size_t cache_capacity = 0;
  std::int64_t cache_staleness = 0;
  TargetMode target_mode = TargetMode::kGlobal;
  std::int32_t leaf_partitions = 8;
  std::uint64_t seed = 0;
  // Initialize the GNN link decoder from the pre-fine-tuning decoder when
  // their widths agree.
  bool warm_decoder = true;
  // Sample the next step's batch on a second thread.
  bool prefetch = false;
  bool validate = true;
  // When false, inference nodes bypass the cache entirely.
  bool use_cache = true;
  // Empty: no files are written.
  std::filesystem::path out_dir;
};

struct StepRecord {
  std::string stage;
  std::int64_t step = 0;
  double loss = 0.0;
  double cache_hit_rate = 0.0;
  std::size_t unique_nodes = 0;
  double elapsed_ms = 0.0;
};

struct EpochRecord {
  std::string stage;
  std::int32_t epoch = 0;
  Split split = Split::kValid;
  std::string metric_name;
  double value = 0.0;
};

struct StageResult {
  StageKind kind = StageKind::kEndToEnd;
  std::vector<StepRecord> steps;
  std::vector<EpochRecord> epochs;
  std::optional<double> best_metric;
  std::int32_t best_epoch = -1;  // 1-based; -1 when never validated
  CacheStats cache;
  std::filesystem::path checkpoint;
};

struct TrainInferenceSplit {
  std::vector<NodeRef> train;
  std::vector<std::vector<NodeRef>> inference;
};

// Uniform train-node subset (at most train_nodes_per_batch) of `nodes`; the
// rest split in order into sub-batches of inference_batch_size.
TrainInferenceSplit split_train_inference(std::span<const NodeRef> nodes, const NodeBudget& budget,
                                          std::uint64_t seed);
// Same over the texted input nodes of an ego batch.
TrainInferenceSplit split_train_inference(const EgoBatch& batch, const LmGnnModel& model,
                                          const NodeBudget& budget, std::uint64_t seed);

// Masked-language-model pre-training of every text encoder on the node texts.
std::vector<double> mlm_pretrain(LmGnnModel& model, const HeteroGraph& graph, std::int64_t steps,
                                 std::size_t batch_size, double learning_rate, std::uint64_t seed);

/// Runs a stage plan over one model. Stages share one optimizer-step clock
/// (the cache stamps) and one metrics log.
class Trainer {
 public:
  Trainer(LmGnnModel& model, const HeteroGraph& graph, TrainConfig config);

  // Validates the plan against the model and graph without training.
  void validate_plan() const;

  StageResult run_stage(const StageConfig& stage, std::size_t stage_index);
  // Runs every stage, then leaves the model at the best-validated stage among
  // those sharing the final stage's mode (and writes it as `best`).
  std::vector<StageResult> run();

  // Evaluates the current parameters. Encoder mode scores raw text
  // embeddings with the pre-fine-tuning decoder (link task only).
  EvalReport evaluate(Split split, bool encoder_mode = false) const;

  const TrainConfig& config() const { return config_; }
  const HeteroGraph& message_passing_graph() const { return mp_graph_; }
  std::int64_t global_step() const { return global_step_; }
  const EmbeddingCache& cache() const { return cache_; }

  // Called with every step record as it is produced.
  std::function<void(const StepRecord&)> on_step;

 private:
  struct Prepared;
  Prepared prepare(StageKind kind, std::int64_t step) const;
  double train_step(StageKind kind, const Prepared& batch, Adam& optimizer, const Tensor* frozen_text,
                    std::int64_t step, StepRecord& record);
  std::size_t steps_per_epoch(StageKind kind) const;
  void log(const nlohmann::json& record);
  nlohmann::json checkpoint_meta(StageKind kind) const;

  LmGnnModel& model_;
  const HeteroGraph& graph_;
  TrainConfig config_;
  HeteroGraph mp_graph_;
  std::vector<std::pair<std::int32_t, Edge>> pretrain_pool_;
  std::optional<PartitionMap> partitions_;
  EmbeddingCache cache_;
  std::int64_t global_step_ = 0;
  bool ran_pretrain_ = false;
  bool warm_decoder_applied_ = false;
  std::unique_ptr<std::ofstream> metrics_file_;
};

}  // namespace lmgnn
