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

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bookgr/tensor.hpp"

namespace bookgr::nn {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;  // decoupled (AdamW)
};

struct AdamMoments {
  std::vector<double> m;
  std::vector<double> v;
};

// One Adam update of `param` in place. `step` is 1-based.
void adam_update(std::span<double> param, std::span<const double> grad,
                 AdamMoments& moments, double lr, const AdamConfig& config,
                 std::int64_t step, bool apply_decay = true);

// Learning rate with linear warm-up over the first `warmup_fraction` of
// `max_steps`, constant afterwards. `step` is 1-based.
double warmup_lr(double base_lr, std::int64_t step, std::int64_t max_steps,
                 double warmup_fraction);

class Adam {
 public:
  struct Param {
    Tensor tensor;
    bool decay = true;
  };

  Adam(std::vector<Param> params, AdamConfig config);

  // Applies one update from the accumulated gradients, then clears them.
  void step(double lr);
  void zero_grad();
  std::int64_t steps_taken() const { return step_; }

 private:
  std::vector<Param> params_;
  std::vector<AdamMoments> moments_;
  AdamConfig config_;
  std::int64_t step_ = 0;
};

}  // namespace bookgr::nn
