#include <algorithm>
#include <unordered_set>

#include "lmgnn/errors.hpp"
#include "lmgnn/metrics.hpp"

namespace lmgnn {

double accuracy(std::span<const std::int64_t> predictions, std::span<const std::int64_t> labels) {
  LMGNN_CHECK(predictions.size() == labels.size(), ContractError,
              "accuracy: " << predictions.size() << " predictions for " << labels.size() << " labels");
  LMGNN_CHECK(!labels.empty(), ContractError, "accuracy of an empty set");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += predictions[i] == labels[i];
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

F1Scores f1_scores(std::span<const std::int64_t> predictions, std::span<const std::int64_t> labels,
                   std::size_t num_classes) {
  LMGNN_CHECK(predictions.size() == labels.size(), ContractError,
              "f1: " << predictions.size() << " predictions for " << labels.size() << " labels");
  std::vector<std::size_t> tp(num_classes), fp(num_classes), fn(num_classes);
  auto check = [&](std::int64_t c) {
    LMGNN_CHECK(c >= 0 && static_cast<std::size_t>(c) < num_classes, IndexError,
                "class " << c << " outside [0, " << num_classes << ")");
    return static_cast<std::size_t>(c);
  };
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto p = check(predictions[i]), y = check(labels[i]);
    if (p == y) {
      ++tp[y];
    } else {
      ++fp[p];
      ++fn[y];
    }
  }
  auto f1 = [](double t, double f_pos, double f_neg) {
    const double precision = t + f_pos > 0 ? t / (t + f_pos) : 0.0;
    const double recall = t + f_neg > 0 ? t / (t + f_neg) : 0.0;
    return precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
  };
  F1Scores out;
  double sum_tp = 0, sum_fp = 0, sum_fn = 0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    out.per_class.push_back(f1(static_cast<double>(tp[c]), static_cast<double>(fp[c]),
                               static_cast<double>(fn[c])));
    if (tp[c] + fp[c] + fn[c] == 0) out.zero_support.push_back(static_cast<std::int64_t>(c));
    sum_tp += static_cast<double>(tp[c]);
    sum_fp += static_cast<double>(fp[c]);
    sum_fn += static_cast<double>(fn[c]);
  }
  if (num_classes > 0) {
    double total = 0;
    for (double v : out.per_class) total += v;
    out.macro = total / static_cast<double>(num_classes);
  }
  out.micro = f1(sum_tp, sum_fp, sum_fn);
  return out;
}

std::size_t RankedQuery::rank() const {
  std::size_t above = 0;
  for (double s : negatives) above += s >= positive;
  return 1 + above;
}

double mrr(std::span<const RankedQuery> queries) {
  LMGNN_CHECK(!queries.empty(), ContractError, "mrr of an empty query list");
  double total = 0.0;
  for (const auto& q : queries) {
    LMGNN_CHECK(!q.negatives.empty(), ContractError, "mrr: query without negatives");
    total += 1.0 / static_cast<double>(q.rank());
  }
  return total / static_cast<double>(queries.size());
}

RecallAtK macro_recall_at_k(const std::vector<std::vector<std::int64_t>>& retrieved,
                            const std::vector<std::vector<std::int64_t>>& relevant, std::size_t k) {
  LMGNN_CHECK(k >= 1, ContractError, "recall@k needs k >= 1");
  LMGNN_CHECK(retrieved.size() == relevant.size(), ContractError,
              "recall@k: " << retrieved.size() << " retrieved lists for " << relevant.size()
                           << " relevant sets");
  RecallAtK out;
  double total = 0.0;
  for (std::size_t q = 0; q < relevant.size(); ++q) {
    const std::unordered_set<std::int64_t> rel(relevant[q].begin(), relevant[q].end());
    if (rel.empty()) {
      ++out.excluded;
      continue;
    }
    std::unordered_set<std::int64_t> hit;
    const std::size_t top = std::min(k, retrieved[q].size());
    for (std::size_t i = 0; i < top; ++i)
      if (rel.contains(retrieved[q][i])) hit.insert(retrieved[q][i]);
    total += static_cast<double>(hit.size()) / static_cast<double>(rel.size());
    ++out.evaluated;
  }
  out.macro = out.evaluated ? total / static_cast<double>(out.evaluated) : 0.0;
  return out;
}

}  // namespace lmgnn
