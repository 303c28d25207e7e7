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
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bookgr/augment.hpp"
#include "bookgr/checkpoint.hpp"
#include "bookgr/tensor.hpp"
#include "bookgr/tokenizer.hpp"

namespace bookgr {

struct ModelConfig {
  std::size_t layers = 2;
  std::size_t heads = 4;
  std::size_t d_model = 64;
  std::size_t d_ff = 256;
  std::size_t vocab_size = 0;
  std::size_t max_segment_len = 64;
  std::size_t max_decode_len = 64;
  double gate_init = -4.0;
  double dropout = 0.0;
  // Section-local sinusoid plus rotary by section index. When off, the
  // sinusoid runs over global token offsets and no rotary is applied.
  bool bilevel_pe = true;
  // When off the encoder uses plain local attention (C_total = C).
  bool retentive = true;

  std::size_t head_dim() const { return d_model / heads; }
  // Throws ConfigError on inconsistent values.
  void validate() const;
  std::string to_json() const;
  static ModelConfig from_json(std::string_view json_text);
  bool operator==(const ModelConfig&) const = default;
};

struct Segment {
  std::vector<int> tokens;
  std::size_t section = 0;  // index of the source section within the input
  std::size_t offset = 0;   // global offset of the first token
};

struct SegmentedInput {
  std::vector<Segment> segments;
  std::size_t total_tokens() const;
};

// Each line of `text` is one section. Sections longer than `max_len` are
// cut into consecutive sub-segments that share the section index. Lines
// without words are skipped (they do not consume a section index).
SegmentedInput segment_input(const Tokenizer& tokenizer, std::string_view text,
                             std::size_t max_len);

// 1-based positions fed to the sinusoid: local offsets within the segment
// when `bilevel`, global token offsets otherwise.
std::vector<std::size_t> token_positions(const Segment& segment, bool bilevel);

// Sinusoid of a 1-based position: even dims sin(p * 10000^(-i/d)), odd dims
// cos of the same angle, i the even index.
std::vector<double> sinusoid(std::size_t position, std::size_t dim);
// One row per position.
nn::Tensor positional_encoding(std::span<const std::size_t> positions, std::size_t dim);

// Rotates column pairs of every row by angle section * 10000^(-2i/cols).
nn::Tensor rotary_by_section(const nn::Tensor& x, std::size_t section);

// softmax(q k^T / sqrt(d_k) + mask) v. `mask` is additive, same shape as the
// score matrix, or undefined for none.
nn::Tensor mha_context(const nn::Tensor& q, const nn::Tensor& k, const nn::Tensor& v,
                       const nn::Tensor& mask = {});

inline constexpr double kRetentiveEps = 1e-6;

// Associative memory of one attention head.
struct RetentiveState {
  nn::Tensor mm;  // d_k x d_v
  nn::Tensor z;   // 1 x d_k
  std::size_t segments = 0;

  static RetentiveState fresh(std::size_t d_k, std::size_t d_v);
};

// (sigma(q) mm) / (sigma(q) z^T) per row, 0 where the denominator is below
// kRetentiveEps; sigma = ELU + 1.
nn::Tensor retentive_retrieve(const nn::Tensor& q, const RetentiveState& state);
// mm += sigma(k)^T v, z += column sums of sigma(k).
RetentiveState retentive_update(const nn::Tensor& k, const nn::Tensor& v,
                                const RetentiveState& state);
// sigmoid(alpha) * c_new + (1 - sigmoid(alpha)) * c for a 1x1 alpha.
nn::Tensor inject_history(const nn::Tensor& c, const nn::Tensor& c_new, const nn::Tensor& alpha);
// [C^1 ... C^H] w_a.
nn::Tensor multihead_output(const std::vector<nn::Tensor>& heads, const nn::Tensor& w_a);

class Model {
 public:
  Model(ModelConfig config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  std::vector<nn::NamedTensor>& parameters() { return params_; }
  const std::vector<nn::NamedTensor>& parameters() const { return params_; }
  // Throws ValidationError for unknown names.
  const nn::Tensor& param(std::string_view name) const;

  // Hidden states for every token of every segment, in order: [T x d].
  // Memory is carried from segment to segment within each layer.
  nn::Tensor encode(const SegmentedInput& input, std::mt19937_64* dropout_rng = nullptr) const;

  // Teacher-forced decoder logits for every prefix position: [len x V].
  // `prefix` starts with BOS.
  nn::Tensor decode_logits(std::span<const int> prefix, const nn::Tensor& memory,
                           std::mt19937_64* dropout_rng = nullptr) const;
  // Logits for the token following `prefix`: [1 x V].
  nn::Tensor decode_step(std::span<const int> prefix, const nn::Tensor& memory) const;

  // Label-smoothed cross entropy summed over target tokens plus EOS.
  nn::Tensor sequence_loss(const SegmentedInput& input, std::span<const int> target,
                           double smoothing, std::mt19937_64* dropout_rng = nullptr) const;

  // Weights go to `path`, the config to `path` + ".json".
  void save(const std::filesystem::path& path) const;
  static Model load(const std::filesystem::path& path);

 private:
  struct Attention {
    nn::Tensor wq, wk, wv, wo;
  };
  struct EncoderLayer {
    nn::Tensor ln1_g, ln1_b, ln2_g, ln2_b;
    Attention attn;
    nn::Tensor alpha;  // 1 x H
    nn::Tensor w1, b1, w2, b2;
  };
  struct DecoderLayer {
    nn::Tensor ln1_g, ln1_b, ln2_g, ln2_b, ln3_g, ln3_b;
    Attention self_attn, cross_attn;
    nn::Tensor w1, b1, w2, b2;
  };

  nn::Tensor& add_param(const std::string& name, nn::Tensor t);
  nn::Tensor feed_forward(const nn::Tensor& x, const nn::Tensor& w1, const nn::Tensor& b1,
                          const nn::Tensor& w2, const nn::Tensor& b2) const;
  nn::Tensor embed(std::span<const int> ids, std::span<const std::size_t> positions) const;

  ModelConfig config_;
  std::vector<nn::NamedTensor> params_;
  nn::Tensor embedding_;  // V x d, tied with the output projection
  std::vector<EncoderLayer> enc_;
  std::vector<DecoderLayer> dec_;
  nn::Tensor enc_ln_g_, enc_ln_b_, dec_ln_g_, dec_ln_b_;

  friend class DecoderSession;
};

struct JointLoss {
  nn::Tensor total;  // L_ind + L_rel, both divided by the batch size
  double indexing = 0.0;
  double retrieval = 0.0;
};

// Builds one graph per pair. When `backward_each` is set every pair's loss
// is back-propagated as soon as it is built (gradients accumulate in the
// parameters) and `total` is left undefined.
JointLoss loss_joint(const Model& model, const Tokenizer& tokenizer,
                     std::span<const TrainingPair> batch, double smoothing,
                     bool backward_each = false, std::mt19937_64* dropout_rng = nullptr);

// Target ids of an identifier; throws ValidationError on out-of-vocabulary
// tokens.
std::vector<int> encode_target(const Tokenizer& tokenizer, std::string_view identifier);

}  // namespace bookgr
