#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lmgnn/tensor.hpp"

namespace lmgnn {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamMoments {
  std::vector<double> first;
  std::vector<double> second;
};

// One bias-corrected Adam update of a single buffer; `step` is the 1-based
// index of this update.
void adam_update(std::span<double> param, std::span<const double> grad,
                 AdamMoments& moments, std::int64_t step,
                 const AdamConfig& config);

/// Adam over a fixed parameter list. Parameters that received no gradient
/// since the last zero_grad() are left untouched.
class Adam {
 public:
  Adam(std::vector<Tensor> params, AdamConfig config);

  void step();
  void zero_grad();

  std::int64_t step_count() const { return step_; }
  const AdamConfig& config() const { return config_; }

 private:
  std::vector<Tensor> params_;
  std::vector<AdamMoments> moments_;
  AdamConfig config_;
  std::int64_t step_ = 0;
};

}  // namespace lmgnn
