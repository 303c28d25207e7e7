// Copyright 2026 The bookgr Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "bookgr/optim.hpp"

#include <algorithm>
#include <cmath>

#include "bookgr/error.hpp"

namespace bookgr::nn {

void adam_update(std::span<double> param, std::span<const double> grad,
                 AdamMoments& moments, double lr, const AdamConfig& config,
                 std::int64_t step, bool apply_decay) {
  if (moments.m.empty()) {
    moments.m.assign(param.size(), 0.0);
    moments.v.assign(param.size(), 0.0);
  }
  if (moments.m.size() != param.size())
    throw ShapeError("adam_update: moment size " + std::to_string(moments.m.size()) +
                     " does not match parameter size " + std::to_string(param.size()));
  const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
  const double decay = apply_decay ? config.weight_decay : 0.0;
  for (std::size_t i = 0; i < param.size(); ++i) {
    double g = grad.empty() ? 0.0 : grad[i];
    moments.m[i] = config.beta1 * moments.m[i] + (1.0 - config.beta1) * g;
    moments.v[i] = config.beta2 * moments.v[i] + (1.0 - config.beta2) * g * g;
    double m_hat = moments.m[i] / bc1;
    double v_hat = moments.v[i] / bc2;
    param[i] -= lr * (m_hat / (std::sqrt(v_hat) + config.eps) + decay * param[i]);
  }
}

double warmup_lr(double base_lr, std::int64_t step, std::int64_t max_steps,
                 double warmup_fraction) {
  auto warmup = static_cast<std::int64_t>(
      std::ceil(warmup_fraction * static_cast<double>(max_steps)));
  if (warmup <= 0 || step >= warmup) return base_lr;
  return base_lr * static_cast<double>(std::max<std::int64_t>(step, 1)) /
         static_cast<double>(warmup);
}

Adam::Adam(std::vector<Param> params, AdamConfig config)
    : params_(std::move(params)), moments_(params_.size()), config_(config) {}

void Adam::step(double lr) {
  ++step_;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& t = params_[i].tensor;
    adam_update(t.mutable_data(), t.grad(), moments_[i], lr, config_, step_,
                params_[i].decay);
  }
  zero_grad();
}

void Adam::zero_grad() {
  for (auto& p : params_) p.tensor.zero_grad();
}

}  // namespace bookgr::nn
