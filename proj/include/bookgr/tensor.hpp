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

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace bookgr::nn {

// Row-major 2-D extents. Vectors are 1xN rows, scalars are 1x1.
struct Shape {
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::size_t size() const { return rows * cols; }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until first accumulation
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  std::vector<double>& ensure_grad() {
    if (grad.empty()) grad.assign(value.size(), 0.0);
    return grad;
  }
};

}  // namespace detail

// A value-semantic handle onto a node of the autodiff graph. Copies share
// the underlying node.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::size_t rows, std::size_t cols,
                      bool requires_grad = false);
  static Tensor full(std::size_t rows, std::size_t cols, double value);
  static Tensor from(std::size_t rows, std::size_t cols,
                     std::vector<double> data, bool requires_grad = false);
  static Tensor scalar(double value);
  // Trainable leaf filled from N(0, stddev^2).
  static Tensor randn(std::size_t rows, std::size_t cols, double stddev,
                      std::mt19937_64& rng);

  bool defined() const { return node_ != nullptr; }
  Shape shape() const { return node_->shape; }
  std::size_t rows() const { return node_->shape.rows; }
  std::size_t cols() const { return node_->shape.cols; }
  std::size_t size() const { return node_->shape.size(); }

  std::span<const double> data() const { return node_->value; }
  std::span<double> mutable_data() { return node_->value; }
  double at(std::size_t r, std::size_t c) const {
    return node_->value[r * node_->shape.cols + c];
  }
  // Value of a 1x1 tensor.
  double item() const;

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool on) { node_->requires_grad = on; }
  // Empty span when no gradient has been accumulated yet.
  std::span<const double> grad() const { return node_->grad; }
  std::span<double> mutable_grad() { return node_->ensure_grad(); }
  void zero_grad();

  // Fresh leaf holding a copy of the values; no history.
  Tensor detach() const;

  detail::Node* node() const { return node_.get(); }
  const std::shared_ptr<detail::Node>& node_ptr() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  friend Tensor make_result(Shape, std::vector<double>,
                            std::vector<Tensor>,
                            std::function<void(detail::Node&)>);
  std::shared_ptr<detail::Node> node_;
};

// Builds an op output. Parents and the backward closure are recorded only
// when gradient recording is enabled and some parent requires a gradient.
Tensor make_result(Shape shape, std::vector<double> value,
                   std::vector<Tensor> parents,
                   std::function<void(detail::Node&)> backward);

bool grad_enabled();

// Disables graph recording on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

enum class Axis { kRows, kCols, kAll };

// Element-wise ops broadcast any operand extent of 1 against the other.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor neg(const Tensor& a);

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t count);
Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t count);
// Splits columns into `parts` equal blocks.
std::vector<Tensor> split_cols(const Tensor& a, std::size_t parts);

Tensor softmax_rows(const Tensor& a);
Tensor log_softmax_rows(const Tensor& a);
Tensor sigmoid(const Tensor& a);
// ELU(x) + 1: x + 1 for x > 0, exp(x) otherwise. Strictly positive.
Tensor elu_plus_one(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
// tanh approximation; smooth everywhere.
Tensor gelu(const Tensor& a);

// kRows reduces over rows (1xC result), kCols over columns (Rx1), kAll to 1x1.
Tensor sum(const Tensor& a, Axis axis);
Tensor mean_all(const Tensor& a);
Tensor broadcast_to(const Tensor& a, Shape shape);

Tensor embedding_lookup(const Tensor& table, std::span<const int> ids);
Tensor layer_norm_rows(const Tensor& x, const Tensor& gain, const Tensor& bias,
                       double eps = 1e-5);

// Sum over rows of the label-smoothed cross entropy
//   (1 - s) * -log p[target] + s * mean_v(-log p[v]).
Tensor cross_entropy_label_smoothed(const Tensor& logits,
                                    std::span<const int> targets,
                                    double smoothing);

// Rotates consecutive column pairs (2i, 2i+1) of row r by angle
// positions[r] * base^(-2i/cols). Requires an even column count.
Tensor rotary_rows(const Tensor& a, std::span<const double> positions,
                   double base = 10000.0);

// out[r] = num[r] / den[r] when den[r] >= eps, else 0. `den` is Rx1.
Tensor guarded_row_divide(const Tensor& num, const Tensor& den, double eps);

// Inverted dropout; identity when p == 0.
Tensor dropout(const Tensor& a, double p, std::mt19937_64& rng);

// Accumulates d(loss)/d(leaf) into every reachable leaf that requires a
// gradient. Intermediate gradients are reset on each call; leaf gradients
// accumulate across calls until zero_grad().
void backward(const Tensor& loss);

}  // namespace bookgr::nn
