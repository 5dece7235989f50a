#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace lmgnn {

double accuracy(std::span<const std::int64_t> predictions, std::span<const std::int64_t> labels);

struct F1Scores {
  std::vector<double> per_class;
  double macro = 0.0;
  double micro = 0.0;
  // Classes with no predictions and no labels (scored 0).
  std::vector<std::int64_t> zero_support;
};

F1Scores f1_scores(std::span<const std::int64_t> predictions, std::span<const std::int64_t> labels,
                   std::size_t num_classes);

struct RankedQuery {
  double positive = 0.0;
  std::vector<double> negatives;

  // 1 + number of negatives scoring >= the positive (ties count against it).
  std::size_t rank() const;
};

double mrr(std::span<const RankedQuery> queries);

struct RecallAtK {
  double macro = 0.0;
  std::size_t evaluated = 0;
  std::size_t excluded = 0;  // queries with an empty relevant set
};

RecallAtK macro_recall_at_k(const std::vector<std::vector<std::int64_t>>& retrieved,
                            const std::vector<std::vector<std::int64_t>>& relevant, std::size_t k);

}  // namespace lmgnn
