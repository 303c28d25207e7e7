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

#include "bookgr/tensor.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "bookgr/error.hpp"

namespace bookgr::nn {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                             Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;

thread_local bool g_grad_enabled = true;

MapMat view(std::vector<double>& v, Shape s) {
  return MapMat(v.data(), static_cast<Eigen::Index>(s.rows),
                static_cast<Eigen::Index>(s.cols));
}

[[noreturn]] void shape_fail(const char* op, Shape a, Shape b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + a.str() +
                   " and " + b.str());
}

std::size_t broadcast_dim(const char* op, Shape a, Shape b, bool rows) {
  std::size_t x = rows ? a.rows : a.cols;
  std::size_t y = rows ? b.rows : b.cols;
  if (x == y) return x;
  if (x == 1) return y;
  if (y == 1) return x;
  shape_fail(op, a, b);
}

// Index of element (r, c) of `s` when broadcast to a larger shape.
inline std::size_t bidx(Shape s, std::size_t r, std::size_t c) {
  return (s.rows == 1 ? 0 : r) * s.cols + (s.cols == 1 ? 0 : c);
}

// Generic broadcasting binary op. `fwd(x, y)` computes the value;
// `dx(x, y, out)` and `dy(x, y, out)` are local partial derivatives.
template <typename F, typename DX, typename DY>
Tensor binary(const char* name, const Tensor& a, const Tensor& b, F fwd, DX dx,
              DY dy) {
  Shape sa = a.shape(), sb = b.shape();
  Shape out{broadcast_dim(name, sa, sb, true),
            broadcast_dim(name, sa, sb, false)};
  std::vector<double> value(out.size());
  const auto& va = a.node()->value;
  const auto& vb = b.node()->value;
  if (sa == out && sb == out) {
    for (std::size_t i = 0; i < value.size(); ++i) value[i] = fwd(va[i], vb[i]);
  } else {
    for (std::size_t r = 0; r < out.rows; ++r)
      for (std::size_t c = 0; c < out.cols; ++c)
        value[r * out.cols + c] = fwd(va[bidx(sa, r, c)], vb[bidx(sb, r, c)]);
  }
  return make_result(out, std::move(value), {a, b},
                     [sa, sb, out, dx, dy](detail::Node& self) {
                       auto& pa = *self.parents[0];
                       auto& pb = *self.parents[1];
                       const auto& g = self.grad;
                       for (std::size_t r = 0; r < out.rows; ++r) {
                         for (std::size_t c = 0; c < out.cols; ++c) {
                           std::size_t o = r * out.cols + c;
                           std::size_t ia = bidx(sa, r, c), ib = bidx(sb, r, c);
                           double x = pa.value[ia], y = pb.value[ib];
                           if (pa.requires_grad)
                             pa.ensure_grad()[ia] += g[o] * dx(x, y, self.value[o]);
                           if (pb.requires_grad)
                             pb.ensure_grad()[ib] += g[o] * dy(x, y, self.value[o]);
                         }
                       }
                     });
}

// Element-wise unary op with derivative expressed via (x, out).
template <typename F, typename D>
Tensor unary(const Tensor& a, F fwd, D deriv) {
  const auto& va = a.node()->value;
  std::vector<double> value(va.size());
  for (std::size_t i = 0; i < va.size(); ++i) value[i] = fwd(va[i]);
  return make_result(a.shape(), std::move(value), {a},
                     [deriv](detail::Node& self) {
                       auto& p = *self.parents[0];
                       auto& pg = p.ensure_grad();
                       for (std::size_t i = 0; i < self.value.size(); ++i)
                         pg[i] += self.grad[i] * deriv(p.value[i], self.value[i]);
                     });
}

}  // namespace

std::string Shape::str() const {
  return "[" + std::to_string(rows) + "x" + std::to_string(cols) + "]";
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) {
  g_grad_enabled = false;
}
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

Tensor make_result(Shape shape, std::vector<double> value,
                   std::vector<Tensor> parents,
                   std::function<void(detail::Node&)> backward) {
  auto node = std::make_shared<detail::Node>();
  node->shape = shape;
  node->value = std::move(value);
  if (g_grad_enabled) {
    bool any = std::any_of(parents.begin(), parents.end(),
                           [](const Tensor& t) { return t.requires_grad(); });
    if (any) {
      node->requires_grad = true;
      node->parents.reserve(parents.size());
      for (auto& p : parents) node->parents.push_back(p.node_ptr());
      node->backward = std::move(backward);
    }
  }
  return Tensor(std::move(node));
}

Tensor Tensor::zeros(std::size_t rows, std::size_t cols, bool requires_grad) {
  return from(rows, cols, std::vector<double>(rows * cols, 0.0), requires_grad);
}

Tensor Tensor::full(std::size_t rows, std::size_t cols, double value) {
  return from(rows, cols, std::vector<double>(rows * cols, value));
}

Tensor Tensor::from(std::size_t rows, std::size_t cols,
                    std::vector<double> data, bool requires_grad) {
  if (data.size() != rows * cols)
    throw ShapeError("Tensor::from: " + std::to_string(data.size()) +
                     " values for shape " + Shape{rows, cols}.str());
  auto node = std::make_shared<detail::Node>();
  node->shape = {rows, cols};
  node->value = std::move(data);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(double value) { return from(1, 1, {value}); }

Tensor Tensor::randn(std::size_t rows, std::size_t cols, double stddev,
                     std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  std::vector<double> v(rows * cols);
  for (auto& x : v) x = dist(rng);
  return from(rows, cols, std::move(v), true);
}

double Tensor::item() const {
  if (size() != 1) throw ShapeError("item: tensor is " + shape().str());
  return node_->value[0];
}

void Tensor::zero_grad() { node_->grad.clear(); }

Tensor Tensor::detach() const {
  return from(rows(), cols(), node_->value, false);
}

Tensor add(const Tensor& a, const Tensor& b) {
  return binary(
      "add", a, b, [](double x, double y) { return x + y; },
      [](double, double, double) { return 1.0; },
      [](double, double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary(
      "sub", a, b, [](double x, double y) { return x - y; },
      [](double, double, double) { return 1.0; },
      [](double, double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary(
      "mul", a, b, [](double x, double y) { return x * y; },
      [](double, double y, double) { return y; },
      [](double x, double, double) { return x; });
}

Tensor div(const Tensor& a, const Tensor& b) {
  return binary(
      "div", a, b, [](double x, double y) { return x / y; },
      [](double, double y, double) { return 1.0 / y; },
      [](double x, double y, double) { return -x / (y * y); });
}

Tensor scale(const Tensor& a, double factor) {
  return unary(
      a, [factor](double x) { return x * factor; },
      [factor](double, double) { return factor; });
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

Tensor matmul(const Tensor& a, const Tensor& b) {
  Shape sa = a.shape(), sb = b.shape();
  if (sa.cols != sb.rows) shape_fail("matmul", sa, sb);
  Shape out{sa.rows, sb.cols};
  std::vector<double> value(out.size());
  view(value, out).noalias() = view(a.node()->value, sa) * view(b.node()->value, sb);
  return make_result(out, std::move(value), {a, b},
                     [sa, sb, out](detail::Node& self) {
                       auto& pa = *self.parents[0];
                       auto& pb = *self.parents[1];
                       auto g = view(self.grad, out);
                       if (pa.requires_grad)
                         view(pa.ensure_grad(), sa).noalias() +=
                             g * view(pb.value, sb).transpose();
                       if (pb.requires_grad)
                         view(pb.ensure_grad(), sb).noalias() +=
                             view(pa.value, sa).transpose() * g;
                     });
}

Tensor transpose(const Tensor& a) {
  Shape sa = a.shape();
  Shape out{sa.cols, sa.rows};
  std::vector<double> value(out.size());
  view(value, out) = view(a.node()->value, sa).transpose();
  return make_result(out, std::move(value), {a},
                     [sa, out](detail::Node& self) {
                       auto& p = *self.parents[0];
                       view(p.ensure_grad(), sa) += view(self.grad, out).transpose();
                     });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  std::size_t rows = parts[0].rows(), cols = 0;
  for (const auto& p : parts) {
    if (p.rows() != rows) shape_fail("concat_cols", parts[0].shape(), p.shape());
    cols += p.cols();
  }
  Shape out{rows, cols};
  std::vector<double> value(out.size());
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (const auto& p : parts) {
    offsets.push_back(off);
    const auto& v = p.node()->value;
    for (std::size_t r = 0; r < rows; ++r)
      std::copy_n(v.begin() + r * p.cols(), p.cols(),
                  value.begin() + r * cols + off);
    off += p.cols();
  }
  return make_result(out, std::move(value), parts,
                     [offsets, out](detail::Node& self) {
                       for (std::size_t i = 0; i < self.parents.size(); ++i) {
                         auto& p = *self.parents[i];
                         if (!p.requires_grad) continue;
                         auto& pg = p.ensure_grad();
                         std::size_t pc = p.shape.cols;
                         for (std::size_t r = 0; r < out.rows; ++r)
                           for (std::size_t c = 0; c < pc; ++c)
                             pg[r * pc + c] += self.grad[r * out.cols + offsets[i] + c];
                       }
                     });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  std::size_t cols = parts[0].cols(), rows = 0;
  for (const auto& p : parts) {
    if (p.cols() != cols) shape_fail("concat_rows", parts[0].shape(), p.shape());
    rows += p.rows();
  }
  Shape out{rows, cols};
  std::vector<double> value;
  value.reserve(out.size());
  std::vector<std::size_t> offsets;
  for (const auto& p : parts) {
    offsets.push_back(value.size());
    value.insert(value.end(), p.node()->value.begin(), p.node()->value.end());
  }
  return make_result(out, std::move(value), parts,
                     [offsets](detail::Node& self) {
                       for (std::size_t i = 0; i < self.parents.size(); ++i) {
                         auto& p = *self.parents[i];
                         if (!p.requires_grad) continue;
                         auto& pg = p.ensure_grad();
                         for (std::size_t j = 0; j < pg.size(); ++j)
                           pg[j] += self.grad[offsets[i] + j];
                       }
                     });
}

Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t count) {
  Shape sa = a.shape();
  if (begin + count > sa.cols)
    throw ShapeError("slice_cols: columns [" + std::to_string(begin) + ", " +
                     std::to_string(begin + count) + ") out of " + sa.str());
  Shape out{sa.rows, count};
  std::vector<double> value(out.size());
  const auto& v = a.node()->value;
  for (std::size_t r = 0; r < sa.rows; ++r)
    std::copy_n(v.begin() + r * sa.cols + begin, count,
                value.begin() + r * count);
  return make_result(out, std::move(value), {a},
                     [sa, begin, count](detail::Node& self) {
                       auto& pg = self.parents[0]->ensure_grad();
                       for (std::size_t r = 0; r < sa.rows; ++r)
                         for (std::size_t c = 0; c < count; ++c)
                           pg[r * sa.cols + begin + c] += self.grad[r * count + c];
                     });
}

Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t count) {
  Shape sa = a.shape();
  if (begin + count > sa.rows)
    throw ShapeError("slice_rows: rows [" + std::to_string(begin) + ", " +
                     std::to_string(begin + count) + ") out of " + sa.str());
  Shape out{count, sa.cols};
  const auto& v = a.node()->value;
  std::vector<double> value(v.begin() + begin * sa.cols,
                            v.begin() + (begin + count) * sa.cols);
  return make_result(out, std::move(value), {a},
                     [sa, begin](detail::Node& self) {
                       auto& pg = self.parents[0]->ensure_grad();
                       for (std::size_t i = 0; i < self.grad.size(); ++i)
                         pg[begin * sa.cols + i] += self.grad[i];
                     });
}

std::vector<Tensor> split_cols(const Tensor& a, std::size_t parts) {
  if (parts == 0 || a.cols() % parts != 0)
    throw ShapeError("split_cols: " + a.shape().str() + " not divisible into " +
                     std::to_string(parts) + " parts");
  std::size_t width = a.cols() / parts;
  std::vector<Tensor> out;
  for (std::size_t i = 0; i < parts; ++i)
    out.push_back(slice_cols(a, i * width, width));
  return out;
}

Tensor softmax_rows(const Tensor& a) {
  Shape s = a.shape();
  std::vector<double> value(a.node()->value);
  for (std::size_t r = 0; r < s.rows; ++r) {
    double* row = value.data() + r * s.cols;
    double mx = *std::max_element(row, row + s.cols);
    double total = 0.0;
    for (std::size_t c = 0; c < s.cols; ++c) total += (row[c] = std::exp(row[c] - mx));
    for (std::size_t c = 0; c < s.cols; ++c) row[c] /= total;
  }
  return make_result(s, std::move(value), {a}, [s](detail::Node& self) {
    auto& pg = self.parents[0]->ensure_grad();
    for (std::size_t r = 0; r < s.rows; ++r) {
      const double* y = self.value.data() + r * s.cols;
      const double* g = self.grad.data() + r * s.cols;
      double dot = 0.0;
      for (std::size_t c = 0; c < s.cols; ++c) dot += g[c] * y[c];
      for (std::size_t c = 0; c < s.cols; ++c)
        pg[r * s.cols + c] += y[c] * (g[c] - dot);
    }
  });
}

Tensor log_softmax_rows(const Tensor& a) {
  Shape s = a.shape();
  std::vector<double> value(a.node()->value);
  for (std::size_t r = 0; r < s.rows; ++r) {
    double* row = value.data() + r * s.cols;
    double mx = *std::max_element(row, row + s.cols);
    double total = 0.0;
    for (std::size_t c = 0; c < s.cols; ++c) total += std::exp(row[c] - mx);
    double lse = mx + std::log(total);
    for (std::size_t c = 0; c < s.cols; ++c) row[c] -= lse;
  }
  return make_result(s, std::move(value), {a}, [s](detail::Node& self) {
    auto& pg = self.parents[0]->ensure_grad();
    for (std::size_t r = 0; r < s.rows; ++r) {
      const double* y = self.value.data() + r * s.cols;
      const double* g = self.grad.data() + r * s.cols;
      double gsum = 0.0;
      for (std::size_t c = 0; c < s.cols; ++c) gsum += g[c];
      for (std::size_t c = 0; c < s.cols; ++c)
        pg[r * s.cols + c] += g[c] - std::exp(y[c]) * gsum;
    }
  });
}

Tensor sigmoid(const Tensor& a) {
  return unary(
      a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor elu_plus_one(const Tensor& a) {
  return unary(
      a, [](double x) { return x > 0.0 ? x + 1.0 : std::exp(x); },
      [](double x, double y) { return x > 0.0 ? 1.0 : y; });
}

Tensor exp(const Tensor& a) {
  return unary(
      a, [](double x) { return std::exp(x); },
      [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
  return unary(
      a, [](double x) { return std::log(x); },
      [](double x, double) { return 1.0 / x; });
}

Tensor gelu(const Tensor& a) {
  static constexpr double kC = 0.7978845608028654;  // sqrt(2/pi)
  return unary(
      a,
      [](double x) {
        return 0.5 * x * (1.0 + std::tanh(kC * (x + 0.044715 * x * x * x)));
      },
      [](double x, double) {
        double u = kC * (x + 0.044715 * x * x * x);
        double t = std::tanh(u);
        double du = kC * (1.0 + 3.0 * 0.044715 * x * x);
        return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du;
      });
}

Tensor sum(const Tensor& a, Axis axis) {
  Shape s = a.shape();
  const auto& v = a.node()->value;
  Shape out;
  std::vector<double> value;
  switch (axis) {
    case Axis::kRows:
      out = {1, s.cols};
      value.assign(s.cols, 0.0);
      for (std::size_t r = 0; r < s.rows; ++r)
        for (std::size_t c = 0; c < s.cols; ++c) value[c] += v[r * s.cols + c];
      break;
    case Axis::kCols:
      out = {s.rows, 1};
      value.assign(s.rows, 0.0);
      for (std::size_t r = 0; r < s.rows; ++r)
        for (std::size_t c = 0; c < s.cols; ++c) value[r] += v[r * s.cols + c];
      break;
    case Axis::kAll:
      out = {1, 1};
      value.assign(1, std::accumulate(v.begin(), v.end(), 0.0));
      break;
  }
  return make_result(out, std::move(value), {a}, [s, out](detail::Node& self) {
    auto& pg = self.parents[0]->ensure_grad();
    for (std::size_t r = 0; r < s.rows; ++r)
      for (std::size_t c = 0; c < s.cols; ++c)
        pg[r * s.cols + c] += self.grad[bidx(out, r, c)];
  });
}

Tensor mean_all(const Tensor& a) {
  return scale(sum(a, Axis::kAll), 1.0 / static_cast<double>(a.size()));
}

Tensor broadcast_to(const Tensor& a, Shape shape) {
  Shape s = a.shape();
  if ((s.rows != shape.rows && s.rows != 1) || (s.cols != shape.cols && s.cols != 1))
    shape_fail("broadcast_to", s, shape);
  std::vector<double> value(shape.size());
  const auto& v = a.node()->value;
  for (std::size_t r = 0; r < shape.rows; ++r)
    for (std::size_t c = 0; c < shape.cols; ++c)
      value[r * shape.cols + c] = v[bidx(s, r, c)];
  return make_result(shape, std::move(value), {a}, [s, shape](detail::Node& self) {
    auto& pg = self.parents[0]->ensure_grad();
    for (std::size_t r = 0; r < shape.rows; ++r)
      for (std::size_t c = 0; c < shape.cols; ++c)
        pg[bidx(s, r, c)] += self.grad[r * shape.cols + c];
  });
}

Tensor embedding_lookup(const Tensor& table, std::span<const int> ids) {
  Shape s = table.shape();
  Shape out{ids.size(), s.cols};
  std::vector<double> value(out.size());
  const auto& v = table.node()->value;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= s.rows)
      throw ShapeError("embedding_lookup: id " + std::to_string(ids[i]) +
                       " outside table " + s.str());
    std::copy_n(v.begin() + ids[i] * s.cols, s.cols, value.begin() + i * s.cols);
  }
  std::vector<int> idx(ids.begin(), ids.end());
  return make_result(out, std::move(value), {table},
                     [idx = std::move(idx), s](detail::Node& self) {
                       auto& pg = self.parents[0]->ensure_grad();
                       for (std::size_t i = 0; i < idx.size(); ++i)
                         for (std::size_t c = 0; c < s.cols; ++c)
                           pg[idx[i] * s.cols + c] += self.grad[i * s.cols + c];
                     });
}

Tensor layer_norm_rows(const Tensor& x, const Tensor& gain, const Tensor& bias,
                       double eps) {
  Shape s = x.shape();
  if (gain.shape() != Shape{1, s.cols}) shape_fail("layer_norm gain", s, gain.shape());
  if (bias.shape() != Shape{1, s.cols}) shape_fail("layer_norm bias", s, bias.shape());
  const auto& v = x.node()->value;
  const auto& gv = gain.node()->value;
  const auto& bv = bias.node()->value;
  std::vector<double> value(s.size()), xhat(s.size()), inv_std(s.rows);
  const double n = static_cast<double>(s.cols);
  for (std::size_t r = 0; r < s.rows; ++r) {
    const double* row = v.data() + r * s.cols;
    double mean = 0.0;
    for (std::size_t c = 0; c < s.cols; ++c) mean += row[c];
    mean /= n;
    double var = 0.0;
    for (std::size_t c = 0; c < s.cols; ++c) var += (row[c] - mean) * (row[c] - mean);
    var /= n;
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t c = 0; c < s.cols; ++c) {
      std::size_t i = r * s.cols + c;
      xhat[i] = (row[c] - mean) * inv_std[r];
      value[i] = xhat[i] * gv[c] + bv[c];
    }
  }
  return make_result(
      s, std::move(value), {x, gain, bias},
      [s, xhat = std::move(xhat), inv_std = std::move(inv_std), n](detail::Node& self) {
        auto& px = *self.parents[0];
        auto& pgain = *self.parents[1];
        auto& pbias = *self.parents[2];
        const auto& g = self.grad;
        if (pgain.requires_grad) {
          auto& gg = pgain.ensure_grad();
          for (std::size_t i = 0; i < s.size(); ++i) gg[i % s.cols] += g[i] * xhat[i];
        }
        if (pbias.requires_grad) {
          auto& bg = pbias.ensure_grad();
          for (std::size_t i = 0; i < s.size(); ++i) bg[i % s.cols] += g[i];
        }
        if (px.requires_grad) {
          auto& xg = px.ensure_grad();
          const auto& gv = pgain.value;
          for (std::size_t r = 0; r < s.rows; ++r) {
            double sum_d = 0.0, sum_dx = 0.0;
            for (std::size_t c = 0; c < s.cols; ++c) {
              std::size_t i = r * s.cols + c;
              double d = g[i] * gv[c];
              sum_d += d;
              sum_dx += d * xhat[i];
            }
            for (std::size_t c = 0; c < s.cols; ++c) {
              std::size_t i = r * s.cols + c;
              double d = g[i] * gv[c];
              xg[i] += inv_std[r] * (d - sum_d / n - xhat[i] * sum_dx / n);
            }
          }
        }
      });
}

Tensor cross_entropy_label_smoothed(const Tensor& logits,
                                    std::span<const int> targets,
                                    double smoothing) {
  Shape s = logits.shape();
  if (targets.size() != s.rows)
    throw ShapeError("cross_entropy: " + std::to_string(targets.size()) +
                     " targets for logits " + s.str());
  const auto& v = logits.node()->value;
  std::vector<double> probs(s.size());
  double loss = 0.0;
  const double n = static_cast<double>(s.cols);
  for (std::size_t r = 0; r < s.rows; ++r) {
    if (targets[r] < 0 || static_cast<std::size_t>(targets[r]) >= s.cols)
      throw ShapeError("cross_entropy: target " + std::to_string(targets[r]) +
                       " outside vocabulary of " + std::to_string(s.cols));
    const double* row = v.data() + r * s.cols;
    double mx = *std::max_element(row, row + s.cols);
    double total = 0.0;
    for (std::size_t c = 0; c < s.cols; ++c) total += std::exp(row[c] - mx);
    double lse = mx + std::log(total);
    double mean_nll = 0.0;
    for (std::size_t c = 0; c < s.cols; ++c) {
      probs[r * s.cols + c] = std::exp(row[c] - lse);
      mean_nll += lse - row[c];
    }
    mean_nll /= n;
    loss += (1.0 - smoothing) * (lse - row[targets[r]]) + smoothing * mean_nll;
  }
  std::vector<int> tgt(targets.begin(), targets.end());
  return make_result(
      {1, 1}, {loss}, {logits},
      [s, tgt = std::move(tgt), probs = std::move(probs), smoothing, n](detail::Node& self) {
        auto& pg = self.parents[0]->ensure_grad();
        double g = self.grad[0];
        for (std::size_t r = 0; r < s.rows; ++r)
          for (std::size_t c = 0; c < s.cols; ++c) {
            double target = (1.0 - smoothing) * (static_cast<int>(c) == tgt[r] ? 1.0 : 0.0) +
                            smoothing / n;
            pg[r * s.cols + c] += g * (probs[r * s.cols + c] - target);
          }
      });
}

Tensor rotary_rows(const Tensor& a, std::span<const double> positions,
                   double base) {
  Shape s = a.shape();
  if (s.cols % 2 != 0)
    throw ShapeError("rotary_rows: odd feature dimension in " + s.str());
  if (positions.size() != s.rows)
    throw ShapeError("rotary_rows: " + std::to_string(positions.size()) +
                     " positions for " + s.str());
  std::size_t half = s.cols / 2;
  std::vector<double> cosv(s.rows * half), sinv(s.rows * half);
  for (std::size_t r = 0; r < s.rows; ++r)
    for (std::size_t i = 0; i < half; ++i) {
      double freq = std::pow(base, -2.0 * static_cast<double>(i) /
                                       static_cast<double>(s.cols));
      double angle = positions[r] * freq;
      cosv[r * half + i] = std::cos(angle);
      sinv[r * half + i] = std::sin(angle);
    }
  const auto& v = a.node()->value;
  std::vector<double> value(s.size());
  for (std::size_t r = 0; r < s.rows; ++r)
    for (std::size_t i = 0; i < half; ++i) {
      std::size_t j = r * s.cols + 2 * i;
      double c = cosv[r * half + i], sn = sinv[r * half + i];
      // Row-vector convention x R with R = [[c, s], [-s, c]].
      value[j] = v[j] * c - v[j + 1] * sn;
      value[j + 1] = v[j] * sn + v[j + 1] * c;
    }
  return make_result(
      s, std::move(value), {a},
      [s, half, cosv = std::move(cosv), sinv = std::move(sinv)](detail::Node& self) {
        auto& pg = self.parents[0]->ensure_grad();
        for (std::size_t r = 0; r < s.rows; ++r)
          for (std::size_t i = 0; i < half; ++i) {
            std::size_t j = r * s.cols + 2 * i;
            double c = cosv[r * half + i], sn = sinv[r * half + i];
            pg[j] += self.grad[j] * c + self.grad[j + 1] * sn;
            pg[j + 1] += -self.grad[j] * sn + self.grad[j + 1] * c;
          }
      });
}

Tensor guarded_row_divide(const Tensor& num, const Tensor& den, double eps) {
  Shape sn = num.shape(), sd = den.shape();
  if (sd != Shape{sn.rows, 1}) shape_fail("guarded_row_divide", sn, sd);
  const auto& nv = num.node()->value;
  const auto& dv = den.node()->value;
  std::vector<double> value(sn.size(), 0.0);
  for (std::size_t r = 0; r < sn.rows; ++r) {
    if (dv[r] < eps) continue;
    for (std::size_t c = 0; c < sn.cols; ++c)
      value[r * sn.cols + c] = nv[r * sn.cols + c] / dv[r];
  }
  return make_result(sn, std::move(value), {num, den},
                     [sn, eps](detail::Node& self) {
                       auto& pn = *self.parents[0];
                       auto& pd = *self.parents[1];
                       for (std::size_t r = 0; r < sn.rows; ++r) {
                         double d = pd.value[r];
                         if (d < eps) continue;
                         double acc = 0.0;
                         for (std::size_t c = 0; c < sn.cols; ++c) {
                           std::size_t i = r * sn.cols + c;
                           if (pn.requires_grad) pn.ensure_grad()[i] += self.grad[i] / d;
                           acc += self.grad[i] * self.value[i];
                         }
                         if (pd.requires_grad) pd.ensure_grad()[r] -= acc / d;
                       }
                     });
}

Tensor dropout(const Tensor& a, double p, std::mt19937_64& rng) {
  if (p <= 0.0) return a;
  std::bernoulli_distribution keep(1.0 - p);
  std::vector<double> mask(a.size());
  for (auto& m : mask) m = keep(rng) ? 1.0 / (1.0 - p) : 0.0;
  return mul(a, Tensor::from(a.rows(), a.cols(), std::move(mask)));
}

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1)
    throw ShapeError("backward: loss must be a scalar, got " +
                     (loss.defined() ? loss.shape().str() : std::string("undefined")));
  if (!loss.requires_grad()) return;

  // Iterative post-order DFS yields a topological order (parents first).
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> visited;
  std::vector<std::pair<detail::Node*, std::size_t>> stack;
  stack.emplace_back(loss.node(), 0);
  visited.insert(loss.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      detail::Node* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second)
        stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  for (auto* node : order)
    if (node->backward) node->grad.assign(node->value.size(), 0.0);
  loss.node()->ensure_grad()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it)
    if ((*it)->backward) (*it)->backward(**it);
}

}  // namespace bookgr::nn
