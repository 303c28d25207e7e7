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

#include "doctest.h"

#include <cmath>
#include <filesystem>

#include "bookgr/checkpoint.hpp"
#include "bookgr/error.hpp"
#include "bookgr/optim.hpp"

using namespace bookgr;
using namespace bookgr::nn;

TEST_CASE("zero gradient without decay leaves parameters unchanged") {
  std::vector<double> p{1.0, -2.0};
  std::vector<double> g{0.0, 0.0};
  AdamMoments mom;
  adam_update(p, g, mom, 0.1, AdamConfig{}, 1);
  CHECK(p[0] == 1.0);
  CHECK(p[1] == -2.0);
}

TEST_CASE("first Adam step moves by the learning rate") {
  std::vector<double> p{0.0};
  std::vector<double> g{1.0};
  AdamMoments mom;
  adam_update(p, g, mom, 0.1, AdamConfig{}, 1);
  CHECK(p[0] == doctest::Approx(-0.1).epsilon(1e-6));
}

TEST_CASE("Adam converges on a 1-D quadratic like a scripted reference") {
  // Reference: textbook Adam written out inline, independent of adam_update.
  const double target = 3.0, lr = 0.1;
  double ref = 0.0, m = 0.0, v = 0.0;
  std::vector<double> x{0.0};
  AdamMoments mom;
  for (int t = 1; t <= 100; ++t) {
    double g = 2.0 * (ref - target);
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    ref -= lr * (m / (1 - std::pow(0.9, t))) / (std::sqrt(v / (1 - std::pow(0.999, t))) + 1e-8);
    std::vector<double> gx{2.0 * (x[0] - target)};
    adam_update(x, gx, mom, lr, AdamConfig{}, t);
  }
  CHECK(x[0] == doctest::Approx(ref).epsilon(1e-12));
  // Adam oscillates around the optimum with amplitude ~lr; 300 steps settle it.
  for (int t = 101; t <= 300; ++t) {
    std::vector<double> gx{2.0 * (x[0] - target)};
    adam_update(x, gx, mom, 0.01, AdamConfig{}, t);
  }
  CHECK(std::abs(x[0] - target) < 1e-2);
}

TEST_CASE("decoupled weight decay shrinks parameters") {
  std::vector<double> p{2.0};
  std::vector<double> g{0.0};
  AdamMoments mom;
  AdamConfig cfg;
  cfg.weight_decay = 0.01;
  adam_update(p, g, mom, 0.5, cfg, 1);
  CHECK(p[0] == doctest::Approx(2.0 - 0.5 * 0.01 * 2.0));
}

TEST_CASE("warm-up is linear over the first tenth of steps") {
  CHECK(warmup_lr(1.0, 1, 100, 0.1) == doctest::Approx(0.1));
  CHECK(warmup_lr(1.0, 5, 100, 0.1) == doctest::Approx(0.5));
  CHECK(warmup_lr(1.0, 10, 100, 0.1) == doctest::Approx(1.0));
  CHECK(warmup_lr(1.0, 80, 100, 0.1) == doctest::Approx(1.0));
}

TEST_CASE("checkpoint round trip validates names and shapes") {
  auto dir = std::filesystem::temp_directory_path() / "bookgr_test_ckpt";
  std::filesystem::create_directories(dir);
  auto path = dir / "a.ckpt";
  std::vector<NamedTensor> src{{"w", Tensor::from(2, 2, {1, 2, 3, 4})},
                               {"b", Tensor::from(1, 2, {5, 6})}};
  save_checkpoint(path, src);

  std::vector<NamedTensor> dst{{"b", Tensor::zeros(1, 2)}, {"w", Tensor::zeros(2, 2)}};
  load_checkpoint(path, dst);
  CHECK(dst[1].tensor.at(1, 0) == 3.0);
  CHECK(dst[0].tensor.at(0, 1) == 6.0);

  std::vector<NamedTensor> wrong_shape{{"b", Tensor::zeros(1, 3)}, {"w", Tensor::zeros(2, 2)}};
  CHECK_THROWS_AS(load_checkpoint(path, wrong_shape), ValidationError);
  std::vector<NamedTensor> wrong_name{{"c", Tensor::zeros(1, 2)}, {"w", Tensor::zeros(2, 2)}};
  CHECK_THROWS_AS(load_checkpoint(path, wrong_name), ValidationError);
  CHECK_THROWS_AS(read_checkpoint(dir / "missing.ckpt"), MissingArtifactError);
}
