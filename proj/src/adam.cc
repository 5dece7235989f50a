#include "lmgnn/adam.hpp"

#include <cmath>

#include "lmgnn/errors.hpp"

namespace lmgnn {

void adam_update(std::span<double> param, std::span<const double> grad,
                 AdamMoments& moments, std::int64_t step,
                 const AdamConfig& config) {
  LMGNN_CHECK(param.size() == grad.size(), ShapeError,
              "adam: parameter of size " << param.size() << " vs gradient of size "
                                         << grad.size());
  LMGNN_CHECK(step >= 1, ContractError, "adam: step index must be >= 1");
  if (moments.first.empty()) {
    moments.first.assign(param.size(), 0.0);
    moments.second.assign(param.size(), 0.0);
  }
  LMGNN_CHECK(moments.first.size() == param.size(), ShapeError,
              "adam: moment buffer size " << moments.first.size()
                                          << " vs parameter size " << param.size());
  const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < param.size(); ++i) {
    auto& m = moments.first[i];
    auto& v = moments.second[i];
    m = config.beta1 * m + (1.0 - config.beta1) * grad[i];
    v = config.beta2 * v + (1.0 - config.beta2) * grad[i] * grad[i];
    param[i] -= config.learning_rate * (m / c1) / (std::sqrt(v / c2) + config.epsilon);
  }
}

Adam::Adam(std::vector<Tensor> params, AdamConfig config)
    : params_(std::move(params)), moments_(params_.size()), config_(config) {
  LMGNN_CHECK(config_.learning_rate > 0.0, ContractError,
              "adam: learning rate must be positive");
}

void Adam::step() {
  ++step_;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor& p = params_[i];
    if (!p.has_grad()) continue;
    adam_update(p.mutable_data(), p.grad(), moments_[i], step_, config_);
  }
}

void Adam::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

}  // namespace lmgnn
