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
#include <random>

#include "bookgr/error.hpp"
#include "bookgr/tensor.hpp"
#include "gradcheck.hpp"

using namespace bookgr;
using namespace bookgr::nn;
using bookgr::testing::grad_check;
using bookgr::testing::random_tensor;

namespace {

void expect_grad(const std::function<Tensor(std::vector<Tensor>&)>& op,
                 std::vector<Tensor> inputs, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Tensor weights;
  auto loss = [&]() {
    Tensor out = op(inputs);
    if (!weights.defined()) weights = random_tensor(out.rows(), out.cols(), rng, 1.0, false);
    return sum(mul(out, weights), Axis::kAll);
  };
  auto r = grad_check(loss, inputs);
  CHECK(r.checked > 0);
  CHECK(r.max_rel_error < 1e-4);
}

}  // namespace

TEST_CASE("softmax rows sum to one") {
  std::mt19937_64 rng(1);
  auto x = random_tensor(5, 7, rng, 3.0);
  auto y = softmax_rows(x);
  for (std::size_t r = 0; r < 5; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < 7; ++c) s += y.at(r, c);
    CHECK(std::abs(s - 1.0) < 1e-9);
  }
}

TEST_CASE("elu_plus_one is positive and equals one at zero") {
  auto x = Tensor::from(1, 5, {0.0, -50.0, -1.0, 2.0, 1e-3});
  auto y = elu_plus_one(x);
  CHECK(y.at(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
  for (double v : y.data()) CHECK(v > 0.0);
  CHECK(y.at(0, 3) == doctest::Approx(3.0));
}

TEST_CASE("finite-difference gradients of every op") {
  std::mt19937_64 rng(42);
  auto a = random_tensor(3, 4, rng);
  auto b = random_tensor(3, 4, rng);
  auto row = random_tensor(1, 4, rng);
  auto col = random_tensor(3, 1, rng);
  auto s = random_tensor(1, 1, rng);
  auto m = random_tensor(4, 5, rng);

  SUBCASE("add/sub/mul/div with broadcasting") {
    expect_grad([](auto& in) { return add(in[0], in[1]); }, {a, b}, 1);
    expect_grad([](auto& in) { return sub(in[0], in[1]); }, {a, row}, 2);
    expect_grad([](auto& in) { return mul(in[0], in[1]); }, {a, col}, 3);
    expect_grad([](auto& in) { return mul(in[0], in[1]); }, {s, a}, 4);
    auto pos = Tensor::from(3, 4, std::vector<double>(12, 0.0), true);
    for (std::size_t i = 0; i < 12; ++i) pos.mutable_data()[i] = 1.5 + 0.1 * i;
    expect_grad([](auto& in) { return div(in[0], in[1]); }, {a, pos}, 5);
    expect_grad([](auto& in) { return scale(in[0], -2.5); }, {a}, 6);
  }
  SUBCASE("matmul and transpose") {
    expect_grad([](auto& in) { return matmul(in[0], in[1]); }, {a, m}, 7);
    expect_grad([](auto& in) { return transpose(in[0]); }, {a}, 8);
  }
  SUBCASE("concat, slice and split") {
    expect_grad([](auto& in) { return concat_cols({in[0], in[1], in[2]}); }, {a, b, col}, 9);
    expect_grad([](auto& in) { return concat_rows({in[0], in[1]}); }, {a, row}, 10);
    expect_grad([](auto& in) { return slice_cols(in[0], 1, 2); }, {a}, 11);
    expect_grad([](auto& in) { return slice_rows(in[0], 1, 2); }, {a}, 12);
    expect_grad([](auto& in) { return split_cols(in[0], 2)[1]; }, {a}, 13);
  }
  SUBCASE("nonlinearities") {
    expect_grad([](auto& in) { return softmax_rows(in[0]); }, {a}, 14);
    expect_grad([](auto& in) { return log_softmax_rows(in[0]); }, {a}, 15);
    expect_grad([](auto& in) { return sigmoid(in[0]); }, {a}, 16);
    expect_grad([](auto& in) { return elu_plus_one(in[0]); }, {a}, 17);
    expect_grad([](auto& in) { return exp(in[0]); }, {a}, 18);
    expect_grad([](auto& in) { return log(exp(in[0])); }, {a}, 19);
    expect_grad([](auto& in) { return gelu(in[0]); }, {a}, 20);
  }
  SUBCASE("reductions and broadcast") {
    expect_grad([](auto& in) { return sum(in[0], Axis::kRows); }, {a}, 21);
    expect_grad([](auto& in) { return sum(in[0], Axis::kCols); }, {a}, 22);
    expect_grad([](auto& in) { return sum(in[0], Axis::kAll); }, {a}, 23);
    expect_grad([](auto& in) { return mean_all(in[0]); }, {a}, 24);
    expect_grad([](auto& in) { return broadcast_to(in[0], {3, 4}); }, {row}, 25);
  }
  SUBCASE("embedding, layer norm, cross entropy") {
    std::vector<int> ids{2, 0, 2, 1};
    expect_grad([&](auto& in) { return embedding_lookup(in[0], ids); }, {a}, 26);
    auto g = random_tensor(1, 4, rng);
    auto bias = random_tensor(1, 4, rng);
    expect_grad([](auto& in) { return layer_norm_rows(in[0], in[1], in[2]); },
                {a, g, bias}, 27);
    std::vector<int> targets{1, 3, 0};
    expect_grad(
        [&](auto& in) { return cross_entropy_label_smoothed(in[0], targets, 0.1); },
        {a}, 28);
  }
  SUBCASE("rotary and guarded divide") {
    std::vector<double> pos{0.0, 3.0, 7.0};
    expect_grad([&](auto& in) { return rotary_rows(in[0], pos); }, {a}, 29);
    auto den = Tensor::from(3, 1, {2.0, 0.3, 0.7}, true);
    expect_grad([](auto& in) { return guarded_row_divide(in[0], in[1], 1e-6); },
                {a, den}, 30);
    // A guarded row stays guarded under perturbation of the numerator only.
    auto zero_den = Tensor::from(3, 1, {2.0, 0.0, 0.7});
    expect_grad([&](auto& in) { return guarded_row_divide(in[0], zero_den, 1e-6); },
                {a}, 31);
    auto out = guarded_row_divide(a, zero_den, 1e-6);
    for (std::size_t c = 0; c < 4; ++c) CHECK(out.at(1, c) == 0.0);
  }
}

TEST_CASE("shape mismatch names both shapes") {
  auto a = Tensor::zeros(2, 3);
  auto b = Tensor::zeros(4, 5);
  try {
    matmul(a, b);
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    std::string msg = e.what();
    CHECK(msg.find("[2x3]") != std::string::npos);
    CHECK(msg.find("[4x5]") != std::string::npos);
  }
  CHECK_THROWS_AS(add(a, b), ShapeError);
  CHECK_THROWS_AS(rotary_rows(Tensor::zeros(1, 3), std::vector<double>{1.0}), ShapeError);
}

TEST_CASE("backward basics") {
  auto w = Tensor::from(1, 3, {1.0, -2.0, 0.5}, true);
  SUBCASE("sum gives ones") {
    backward(sum(w, Axis::kAll));
    for (double g : w.grad()) CHECK(g == 1.0);
  }
  SUBCASE("sum of squares gives 2w") {
    backward(sum(mul(w, w), Axis::kAll));
    for (std::size_t i = 0; i < 3; ++i) CHECK(w.grad()[i] == doctest::Approx(2.0 * w.data()[i]));
  }
  SUBCASE("shared subexpression y = x + x") {
    backward(sum(add(w, w), Axis::kAll));
    for (double g : w.grad()) CHECK(g == 2.0);
  }
  SUBCASE("repeated calls accumulate until zero_grad") {
    auto loss = sum(mul(w, w), Axis::kAll);
    backward(loss);
    backward(loss);
    CHECK(w.grad()[0] == doctest::Approx(4.0));
    w.zero_grad();
    CHECK(w.grad().empty());
  }
  SUBCASE("non-scalar loss is rejected") {
    CHECK_THROWS_AS(backward(mul(w, w)), ShapeError);
  }
}

TEST_CASE("no-grad guard records no history") {
  auto w = Tensor::from(1, 2, {1.0, 2.0}, true);
  NoGradGuard guard;
  auto y = mul(w, w);
  CHECK_FALSE(y.requires_grad());
  CHECK(y.node()->parents.empty());
}

TEST_CASE("rotary at position zero is the identity and preserves norms") {
  std::mt19937_64 rng(9);
  auto x = random_tensor(4, 8, rng);
  std::vector<double> zero(4, 0.0), pos{1.0, 5.0, 17.0, 100.0};
  auto same = rotary_rows(x, zero);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(same.data()[i] == x.data()[i]);
  auto rot = rotary_rows(x, pos);
  for (std::size_t r = 0; r < 4; ++r) {
    double n0 = 0.0, n1 = 0.0;
    for (std::size_t c = 0; c < 8; ++c) {
      n0 += x.at(r, c) * x.at(r, c);
      n1 += rot.at(r, c) * rot.at(r, c);
    }
    CHECK(std::abs(std::sqrt(n0) - std::sqrt(n1)) < 1e-9);
  }
}
