#include <gtest/gtest.h>

#include <random>

#include "lmgnn/errors.hpp"
#include "lmgnn/metrics.hpp"

namespace lmgnn {
namespace {

using Ids = std::vector<std::int64_t>;

TEST(Accuracy, Cases) {
  EXPECT_EQ(accuracy(Ids{1, 2, 3}, Ids{1, 2, 3}), 1.0);
  EXPECT_EQ(accuracy(Ids{0, 0}, Ids{1, 1}), 0.0);
  EXPECT_EQ(accuracy(Ids{1, 2, 3, 0}, Ids{1, 2, 3, 1}), 0.75);
  EXPECT_THROW(accuracy(Ids{}, Ids{}), ContractError);
  EXPECT_THROW(accuracy(Ids{1}, Ids{1, 2}), ContractError);
}

TEST(F1, PerfectAndZeroSupport) {
  auto f = f1_scores(Ids{0, 1, 1}, Ids{0, 1, 1}, 3);
  EXPECT_EQ(f.per_class[0], 1.0);
  EXPECT_EQ(f.per_class[1], 1.0);
  EXPECT_EQ(f.per_class[2], 0.0);
  EXPECT_EQ(f.zero_support, Ids{2});
  EXPECT_NEAR(f.macro, 2.0 / 3.0, 1e-15);
  EXPECT_EQ(f.micro, 1.0);
}

TEST(F1, TwoTruePositivesOneEachError) {
  // Class 0: TP=2, FP=1, FN=1.
  auto f = f1_scores(Ids{0, 0, 0, 1}, Ids{0, 0, 1, 0}, 2);
  EXPECT_NEAR(f.per_class[0], 2.0 / 3.0, 1e-15);
}

// Brute-force F1 over the whole 2-class, 3-sample space.
TEST(F1, ExhaustiveTwoClassThreeSamples) {
  for (int p = 0; p < 8; ++p)
    for (int l = 0; l < 8; ++l) {
      Ids pred, lab;
      for (int i = 0; i < 3; ++i) {
        pred.push_back((p >> i) & 1);
        lab.push_back((l >> i) & 1);
      }
      auto f = f1_scores(pred, lab, 2);
      double macro = 0;
      for (int c = 0; c < 2; ++c) {
        int tp = 0, fp = 0, fn = 0;
        for (int i = 0; i < 3; ++i) {
          tp += pred[i] == c && lab[i] == c;
          fp += pred[i] == c && lab[i] != c;
          fn += pred[i] != c && lab[i] == c;
        }
        const double oracle = tp == 0 ? 0.0 : 2.0 * tp / (2.0 * tp + fp + fn);
        EXPECT_NEAR(f.per_class[static_cast<std::size_t>(c)], oracle, 1e-15);
        macro += oracle / 2;
      }
      EXPECT_NEAR(f.macro, macro, 1e-15);
    }
}

TEST(F1, MicroEqualsAccuracy) {
  std::mt19937_64 rng(0);
  std::uniform_int_distribution<std::int64_t> cls(0, 4);
  for (int trial = 0; trial < 50; ++trial) {
    Ids p(37), l(37);
    for (std::size_t i = 0; i < p.size(); ++i) {
      p[i] = cls(rng);
      l[i] = cls(rng);
    }
    EXPECT_NEAR(f1_scores(p, l, 5).micro, accuracy(p, l), 1e-12);
  }
}

TEST(Mrr, Cases) {
  std::vector<RankedQuery> all_first = {{1.0, {0.1, 0.5}}, {3.0, {-1.0}}};
  EXPECT_EQ(mrr(all_first), 1.0);
  std::vector<RankedQuery> q = {{5, {1, 2}}, {5, {6, 1}}, {5, {6, 7, 8, 1}}};
  EXPECT_EQ(q[2].rank(), 4u);
  EXPECT_NEAR(mrr(q), (1 + 0.5 + 0.25) / 3, 1e-15);
  EXPECT_THROW(mrr({}), ContractError);
  std::vector<RankedQuery> empty_neg = {{1.0, {}}};
  EXPECT_THROW(mrr(empty_neg), ContractError);
}

TEST(Mrr, PessimisticTies) {
  RankedQuery q{2.0, {2.0, 2.0, 1.0}};
  EXPECT_EQ(q.rank(), 3u);
}

TEST(Mrr, LowNegativeAndMonotoneTransformInvariance) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0, 1);
  std::vector<RankedQuery> qs;
  for (int i = 0; i < 30; ++i) {
    RankedQuery q{n(rng), {}};
    for (int j = 0; j < 9; ++j) q.negatives.push_back(n(rng));
    qs.push_back(q);
  }
  const double base = mrr(qs);
  auto lower = qs, transformed = qs;
  for (auto& q : lower) q.negatives.push_back(-1e9);
  EXPECT_EQ(mrr(lower), base);
  for (auto& q : transformed) {
    q.positive = std::exp(2 * q.positive) + 3;
    for (double& x : q.negatives) x = std::exp(2 * x) + 3;
  }
  EXPECT_EQ(mrr(transformed), base);
  for (auto& q : qs) {
    EXPECT_GE(q.rank(), 1u);
    EXPECT_LE(q.rank(), 1 + q.negatives.size());
  }
}

TEST(RecallAtK, Cases) {
  auto all = macro_recall_at_k({{1, 2, 3}}, {{1, 2, 3}}, 5);
  EXPECT_EQ(all.macro, 1.0);
  auto quarter = macro_recall_at_k({{1, 9, 8}}, {{1, 2, 3, 4}}, 3);
  EXPECT_EQ(quarter.macro, 0.25);
  auto two = macro_recall_at_k({{1}, {1, 5}}, {{1}, {1, 2}}, 2);
  EXPECT_EQ(two.macro, 0.75);
  auto excl = macro_recall_at_k({{1}, {2}}, {{1}, {}}, 1);
  EXPECT_EQ(excl.excluded, 1u);
  EXPECT_EQ(excl.evaluated, 1u);
  EXPECT_EQ(excl.macro, 1.0);
  // Only the first K retrieved items count.
  EXPECT_EQ(macro_recall_at_k({{9, 1}}, {{1}}, 1).macro, 0.0);
  EXPECT_THROW(macro_recall_at_k({{1}}, {{1}}, 0), ContractError);
}

}  // namespace
}  // namespace lmgnn
