#include <gtest/gtest.h>

#include <cmath>

#include "lmgnn/decoders.hpp"
#include "lmgnn/errors.hpp"
#include "lmgnn/ops.hpp"
#include "test_support.hpp"

namespace lmgnn {
namespace {

TEST(DistMult, BasisAndZeroCases) {
  const std::vector<double> e1 = {1, 0, 0}, ones = {1, 1, 1}, zero = {0, 0, 0}, x = {0.3, -2, 5};
  EXPECT_EQ(distmult_score(e1, ones, e1), 1.0);
  EXPECT_EQ(distmult_score(x, zero, e1), 0.0);
}

TEST(DistMult, HandComputed) {
  const std::vector<double> h = {1, 2}, r = {3, -1}, t = {-1, 1};
  EXPECT_EQ(distmult_score(h, r, t), -5.0);
  DistMult dm(Tensor::from({1, 2}, r));
  const std::vector<std::int32_t> rel = {0};
  EXPECT_EQ(dm.score(Tensor::from({1, 2}, h), rel, Tensor::from({1, 2}, t)).item(), -5.0);
}

TEST(DistMult, SymmetricAndRelationChecked) {
  std::mt19937_64 rng(1);
  DistMult dm(3, 5, rng);
  Tensor h = Tensor::randn({4, 5}, 1.0, rng), t = Tensor::randn({4, 5}, 1.0, rng);
  const std::vector<std::int32_t> rel = {0, 2, 1, 2};
  Tensor a = dm.score(h, rel, t), b = dm.score(t, rel, h);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(a.at(i), b.at(i), 1e-12);
  const std::vector<std::int32_t> bad = {0, 3, 1, 2};
  EXPECT_THROW(dm.score(h, bad, t), IndexError);
}

TEST(LinkLoss, ClosedForms) {
  const std::vector<std::int8_t> y = {1, -1, 1};
  EXPECT_NEAR(link_loss(y, Tensor::zeros({3})).item(), std::log(2.0), 1e-15);
  const std::vector<std::int8_t> pos = {1};
  EXPECT_NEAR(link_loss(pos, Tensor::from({1}, {100})).item(), 0.0, 1e-40);
  const std::vector<std::int8_t> y2 = {1, -1};
  const double got = link_loss(y2, Tensor::from({2}, {1.0, -2.0})).item();
  EXPECT_NEAR(got, (std::log1p(std::exp(-1.0)) + std::log1p(std::exp(-2.0))) / 2, 1e-15);
  EXPECT_NEAR(got, 0.2201, 5e-5);
}

TEST(LinkLoss, LengthMismatchAndBadLabel) {
  const std::vector<std::int8_t> y = {1, -1};
  EXPECT_THROW(link_loss(y, Tensor::zeros({3})), ContractError);
  const std::vector<std::int8_t> z = {1, 0};
  EXPECT_THROW(link_loss(z, Tensor::zeros({2})), ContractError);
}

TEST(LinkLoss, MonotoneInScore) {
  const std::vector<std::int8_t> pos = {1}, neg = {-1};
  double prev_pos = INFINITY, prev_neg = -INFINITY;
  for (double s = -20; s <= 20; s += 0.5) {
    const double lp = link_loss(pos, Tensor::from({1}, {s})).item();
    const double ln = link_loss(neg, Tensor::from({1}, {s})).item();
    EXPECT_LT(lp, prev_pos);
    EXPECT_GT(ln, prev_neg);
    prev_pos = lp;
    prev_neg = ln;
  }
}

TEST(NodeLoss, UniformSingleClassAndHand) {
  const std::vector<std::int64_t> labels = {3, 0};
  NodeClassifierHead zero(Tensor::zeros({2, 4}), Tensor());
  EXPECT_NEAR(node_loss(zero, Tensor::from({2, 2}, {1, 2, 3, 4}), labels).item(), std::log(4.0), 1e-15);
  const std::vector<std::int64_t> only = {0};
  std::mt19937_64 rng(0);
  NodeClassifierHead one(3, 1, true, rng);
  EXPECT_EQ(node_loss(one, Tensor::from({1, 3}, {1, 2, 3}), only).item(), 0.0);

  NodeClassifierHead hand(Tensor::from({2, 2}, {1, -1, 0.5, 2}), Tensor());
  const std::vector<std::int64_t> y = {1};
  // x = [2, 1] -> logits [2*1 + 1*0.5, 2*-1 + 1*2] = [2.5, 0]
  const double expect = -(0.0 - std::log(std::exp(2.5) + std::exp(0.0)));
  EXPECT_NEAR(node_loss(hand, Tensor::from({1, 2}, {2, 1}), y).item(), expect, 1e-15);
  const std::vector<std::int64_t> oob = {2};
  EXPECT_THROW(node_loss(hand, Tensor::from({1, 2}, {2, 1}), oob), IndexError);
}

TEST(EdgeLoss, UniformAndHand) {
  const std::vector<std::int64_t> y = {2};
  EdgeClassifierHead zero(Tensor::zeros({6, 4}), Tensor());
  Tensor h = Tensor::from({1, 3}, {1, 2, 3}), t = Tensor::from({1, 3}, {-1, 0, 1});
  EXPECT_NEAR(edge_loss(zero, h, t, y).item(), std::log(4.0), 1e-15);
  EXPECT_NEAR(edge_loss(zero, h, t, y).item(), 1.3863, 5e-5);

  // 1-dim embeddings: z = [h, t] = [2, -1]; W rows [1, 0] and [3, -2].
  EdgeClassifierHead hand(Tensor::from({2, 2}, {1, 0, 3, -2}), Tensor::from({2}, {0.5, 0}));
  const std::vector<std::int64_t> c = {0};
  const double l0 = 2 * 1 + -1 * 3 + 0.5, l1 = 2 * 0 + -1 * -2;
  const double expect = -(l0 - std::log(std::exp(l0) + std::exp(l1)));
  EXPECT_NEAR(edge_loss(hand, Tensor::from({1, 1}, {2}), Tensor::from({1, 1}, {-1}), c).item(), expect,
              1e-15);
}

TEST(EdgeLoss, OrderSensitiveAndShapeChecked) {
  std::mt19937_64 rng(2);
  EdgeClassifierHead head(3, 4, false, rng);
  Tensor h = Tensor::randn({1, 3}, 1.0, rng), t = Tensor::randn({1, 3}, 1.0, rng);
  Tensor a = head.logits(h, t), b = head.logits(t, h);
  double diff = 0;
  for (std::size_t i = 0; i < 4; ++i) diff += std::abs(a.at(i) - b.at(i));
  EXPECT_GT(diff, 1e-9);
  EXPECT_THROW(head.logits(Tensor::zeros({1, 2}), Tensor::zeros({1, 2})), ShapeError);
}

TEST(EdgeLoss, TranslationChangesLogits) {
  std::mt19937_64 rng(3);
  EdgeClassifierHead head(2, 3, true, rng);
  Tensor h = Tensor::randn({1, 2}, 1.0, rng), t = Tensor::randn({1, 2}, 1.0, rng);
  Tensor shift = Tensor::from({1, 2}, {0.7, -0.3});
  Tensor a = head.logits(h, t), b = head.logits(add(h, shift), add(t, shift));
  double diff = 0;
  for (std::size_t i = 0; i < 3; ++i) diff += std::abs(a.at(i) - b.at(i));
  EXPECT_GT(diff, 1e-9);
}

TEST(Losses, GradientsMatchFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    std::mt19937_64 rng(seed);
    DistMult dm(2, 4, rng);
    NodeClassifierHead nh(4, 3, true, rng);
    EdgeClassifierHead eh(4, 3, true, rng);
    Tensor h = Tensor::randn({3, 4}, 1.0, rng, true), t = Tensor::randn({3, 4}, 1.0, rng, true);
    const std::vector<std::int32_t> rel = {0, 1, 1};
    const std::vector<std::int8_t> y = {1, -1, -1};
    const std::vector<std::int64_t> c = {2, 0, 1};
    auto link = [&] { return link_loss(y, dm.score(h, rel, t)); };
    auto node = [&] { return node_loss(nh, h, c); };
    auto edge = [&] { return edge_loss(eh, h, t, c); };
    for (Tensor p : {h, t, dm.relations()}) EXPECT_LT(testing::grad_check(p, link).max_rel_error, 1e-3);
    for (auto& p : nh.params("")) EXPECT_LT(testing::grad_check(p.tensor, node).max_rel_error, 1e-3);
    EXPECT_LT(testing::grad_check(h, node).max_rel_error, 1e-3);
    for (auto& p : eh.params("")) EXPECT_LT(testing::grad_check(p.tensor, edge).max_rel_error, 1e-3);
    for (Tensor p : {h, t}) EXPECT_LT(testing::grad_check(p, edge).max_rel_error, 1e-3);
  }
}

}  // namespace
}  // namespace lmgnn
