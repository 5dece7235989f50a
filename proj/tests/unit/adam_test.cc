#include <gtest/gtest.h>

#include <cmath>

#include "lmgnn/adam.hpp"
#include "lmgnn/errors.hpp"

namespace lmgnn {
namespace {

TEST(Adam, ZeroGradientLeavesParameters) {
  std::vector<double> p = {1.0, -2.0};
  const std::vector<double> g = {0.0, 0.0};
  AdamMoments m;
  adam_update(p, g, m, 1, {});
  EXPECT_EQ(p, (std::vector<double>{1.0, -2.0}));
}

TEST(Adam, FirstStepMovesByLearningRate) {
  // Bias-corrected m = g, v = g^2, so the step is lr * g / (|g| + eps).
  for (double g : {0.5, -3.0, 1e-2}) {
    std::vector<double> p = {0.0};
    const std::vector<double> grad = {g};
    AdamMoments m;
    const AdamConfig cfg{.learning_rate = 1e-3};
    adam_update(p, grad, m, 1, cfg);
    EXPECT_NEAR(p[0], -cfg.learning_rate * g / (std::abs(g) + cfg.epsilon), 1e-15);
    EXPECT_NEAR(std::abs(p[0]), 1e-3, 1e-8);
  }
}

TEST(Adam, ShapeMismatch) {
  std::vector<double> p = {0.0, 1.0};
  const std::vector<double> g = {1.0};
  AdamMoments m;
  EXPECT_THROW(adam_update(p, g, m, 1, {}), ShapeError);
}

TEST(Adam, SkipsParametersWithoutGradient) {
  Tensor a = Tensor::filled({2}, 1.0, true);
  Tensor b = Tensor::filled({2}, 1.0, true);
  Adam adam({a, b}, {});
  a.grad_buffer()[0] = 1.0;
  adam.step();
  EXPECT_LT(a.at(0), 1.0);
  EXPECT_EQ(b.at(0), 1.0);
  EXPECT_EQ(adam.step_count(), 1);
}

TEST(Adam, DeterministicRuns) {
  auto run = [] {
    std::mt19937_64 rng(1);
    Tensor w = Tensor::randn({3}, 1.0, rng, true);
    Adam adam({w}, {});
    for (int s = 0; s < 5; ++s) {
      auto g = w.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] = std::sin(w.at(i) + s);
      adam.step();
      adam.zero_grad();
    }
    return std::vector<double>(w.data().begin(), w.data().end());
  };
  EXPECT_EQ(run(), run());
}

}  // namespace
}  // namespace lmgnn
