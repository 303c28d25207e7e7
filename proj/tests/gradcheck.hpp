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

// Central finite-difference oracle for the autodiff engine. Independent of
// backward(): it only evaluates forward values.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "bookgr/tensor.hpp"

namespace bookgr::testing {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
};

// Relative error with a floor on the denominator so that gradients that are
// numerically zero compare on an absolute scale.
inline double rel_error(double a, double b, double floor = 1e-3) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

inline GradCheckResult grad_check(
    const std::function<nn::Tensor()>& loss_fn, std::vector<nn::Tensor> inputs,
    double h = 1e-5, double floor = 1e-3) {
  for (auto& t : inputs) t.zero_grad();
  nn::backward(loss_fn());
  GradCheckResult result;
  for (auto& t : inputs) {
    std::vector<double> analytic(t.size(), 0.0);
    if (!t.grad().empty()) std::ranges::copy(t.grad(), analytic.begin());
    auto data = t.mutable_data();
    for (std::size_t i = 0; i < t.size(); ++i) {
      double saved = data[i];
      double plus, minus;
      {
        nn::NoGradGuard guard;
        data[i] = saved + h;
        plus = loss_fn().item();
        data[i] = saved - h;
        minus = loss_fn().item();
      }
      data[i] = saved;
      double numeric = (plus - minus) / (2.0 * h);
      result.max_rel_error =
          std::max(result.max_rel_error, rel_error(analytic[i], numeric, floor));
      ++result.checked;
    }
  }
  return result;
}

inline nn::Tensor random_tensor(std::size_t rows, std::size_t cols,
                                std::mt19937_64& rng, double stddev = 1.0,
                                bool trainable = true) {
  auto t = nn::Tensor::randn(rows, cols, stddev, rng);
  t.set_requires_grad(trainable);
  return t;
}

}  // namespace bookgr::testing
