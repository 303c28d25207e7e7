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

#include "bookgr/inference.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "bookgr/error.hpp"

namespace bookgr {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Row = Eigen::RowVectorXd;
using MatView = Eigen::Map<const RowMat>;
using RowView = Eigen::Map<const Row>;

MatView view(const nn::Tensor& t) {
  return MatView(t.data().data(), static_cast<Eigen::Index>(t.rows()),
                 static_cast<Eigen::Index>(t.cols()));
}

RowView row_view(const nn::Tensor& t) {
  return RowView(t.data().data(), static_cast<Eigen::Index>(t.size()));
}

Row layer_norm(const Row& x, const nn::Tensor& g, const nn::Tensor& b) {
  const double n = static_cast<double>(x.size());
  double mean = x.sum() / n;
  Row c = x.array() - mean;
  double var = c.squaredNorm() / n;
  return (c / std::sqrt(var + 1e-5)).cwiseProduct(row_view(g)) + row_view(b);
}

double gelu(double x) {
  static constexpr double kC = 0.7978845608028654;
  return 0.5 * x * (1.0 + std::tanh(kC * (x + 0.044715 * x * x * x)));
}

void softmax_inplace(Eigen::VectorXd& s) {
  double m = s.maxCoeff();
  s = (s.array() - m).exp();
  s /= s.sum();
}

}  // namespace

struct DecoderSession::Weights {
  // Cross-attention keys and values of the encoder states, per layer.
  std::vector<RowMat> cross_k, cross_v;
};

struct DecoderSession::Node {
  std::vector<Row> k, v;  // per layer
  std::vector<double> log_probs;
  std::unordered_map<int, std::unique_ptr<Node>> children;
};

DecoderSession::DecoderSession(const Model& model, const nn::Tensor& memory)
    : model_(model), w_(std::make_unique<Weights>()) {
  const auto& cfg = model.config();
  if (memory.cols() != cfg.d_model || memory.rows() == 0)
    throw ShapeError("decoder session: encoder states " + memory.shape().str());
  auto mem = view(memory);
  for (const auto& layer : model.dec_) {
    w_->cross_k.push_back(mem * view(layer.cross_attn.wk));
    w_->cross_v.push_back(mem * view(layer.cross_attn.wv));
  }
  root_ = std::make_unique<Node>();
  std::vector<Node*> path;
  auto bos = extend(path, Tokenizer::kBos);
  root_.reset(bos);
}

DecoderSession::~DecoderSession() = default;

DecoderSession::Node* DecoderSession::extend(const std::vector<Node*>& path, int token) {
  const auto& cfg = model_.config();
  const std::size_t d = cfg.d_model, heads = cfg.heads, dk = cfg.head_dim();
  const std::size_t pos = path.size() + 1;
  if (pos > cfg.max_decode_len)
    throw ValidationError("decoder prefix exceeds max_decode_len " +
                          std::to_string(cfg.max_decode_len));
  if (token < 0 || static_cast<std::size_t>(token) >= cfg.vocab_size)
    throw ValidationError("token id " + std::to_string(token) + " outside the vocabulary");
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dk));
  auto node = std::make_unique<Node>();
  auto emb = view(model_.embedding_);
  Row x = emb.row(token) * std::sqrt(static_cast<double>(d));
  auto pe = sinusoid(pos, d);
  for (std::size_t i = 0; i < d; ++i) x[static_cast<Eigen::Index>(i)] += pe[i];

  for (std::size_t l = 0; l < model_.dec_.size(); ++l) {
    const auto& layer = model_.dec_[l];
    Row h = layer_norm(x, layer.ln1_g, layer.ln1_b);
    Row q = h * view(layer.self_attn.wq);
    node->k.push_back(h * view(layer.self_attn.wk));
    node->v.push_back(h * view(layer.self_attn.wv));
    Row ctx(static_cast<Eigen::Index>(d));
    const std::size_t n = path.size() + 1;
    auto key = [&](std::size_t j) -> const Row& { return j < path.size() ? path[j]->k[l] : node->k[l]; };
    auto val = [&](std::size_t j) -> const Row& { return j < path.size() ? path[j]->v[l] : node->v[l]; };
    for (std::size_t hd = 0; hd < heads; ++hd) {
      const auto off = static_cast<Eigen::Index>(hd * dk), w = static_cast<Eigen::Index>(dk);
      Eigen::VectorXd s(static_cast<Eigen::Index>(n));
      for (std::size_t j = 0; j < n; ++j)
        s[static_cast<Eigen::Index>(j)] = q.segment(off, w).dot(key(j).segment(off, w)) * inv_sqrt;
      softmax_inplace(s);
      Row c = Row::Zero(w);
      for (std::size_t j = 0; j < n; ++j) c += s[static_cast<Eigen::Index>(j)] * val(j).segment(off, w);
      ctx.segment(off, w) = c;
    }
    x += ctx * view(layer.self_attn.wo);

    h = layer_norm(x, layer.ln2_g, layer.ln2_b);
    q = h * view(layer.cross_attn.wq);
    const auto& ck = w_->cross_k[l];
    const auto& cv = w_->cross_v[l];
    for (std::size_t hd = 0; hd < heads; ++hd) {
      const auto off = static_cast<Eigen::Index>(hd * dk), w = static_cast<Eigen::Index>(dk);
      Eigen::VectorXd s = ck.middleCols(off, w) * q.segment(off, w).transpose() * inv_sqrt;
      softmax_inplace(s);
      ctx.segment(off, w) = s.transpose() * cv.middleCols(off, w);
    }
    x += ctx * view(layer.cross_attn.wo);

    h = layer_norm(x, layer.ln3_g, layer.ln3_b);
    Row f = h * view(layer.w1) + row_view(layer.b1);
    f = f.unaryExpr([](double v) { return gelu(v); });
    x += f * view(layer.w2) + row_view(layer.b2);
  }
  x = layer_norm(x, model_.dec_ln_g_, model_.dec_ln_b_);
  Eigen::VectorXd logits = emb * x.transpose();
  double m = logits.maxCoeff();
  double lse = m + std::log((logits.array() - m).exp().sum());
  node->log_probs.resize(static_cast<std::size_t>(logits.size()));
  for (Eigen::Index i = 0; i < logits.size(); ++i)
    node->log_probs[static_cast<std::size_t>(i)] = logits[i] - lse;
  ++cached_;
  if (path.empty()) return node.release();
  auto* raw = node.get();
  path.back()->children.emplace(token, std::move(node));
  return raw;
}

std::vector<double> DecoderSession::next_log_probs(std::span<const int> prefix) {
  std::vector<Node*> path{root_.get()};
  for (int t : prefix) {
    auto it = path.back()->children.find(t);
    path.push_back(it != path.back()->children.end() ? it->second.get() : extend(path, t));
  }
  return path.back()->log_probs;
}

}  // namespace bookgr
