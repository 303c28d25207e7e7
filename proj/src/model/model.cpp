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

#include "bookgr/model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "bookgr/error.hpp"
#include "bookgr/text.hpp"
#include "json.hpp"

namespace bookgr {

using nn::Tensor;

namespace {

using json = nlohmann::ordered_json;

Tensor constant_ones() { return Tensor::scalar(1.0); }

Tensor causal_mask(std::size_t n) {
  std::vector<double> m(n * n, 0.0);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = r + 1; c < n; ++c) m[r * n + c] = -1e9;
  return Tensor::from(n, n, std::move(m));
}

}  // namespace

void ModelConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("model config: " + what); };
  if (layers < 1) fail("layers must be at least 1");
  if (heads < 1) fail("heads must be at least 1");
  if (d_model % heads != 0) fail("d_model must be divisible by heads");
  if (head_dim() % 2 != 0) fail("head dimension must be even for rotary encoding");
  if (d_ff < 1) fail("d_ff must be at least 1");
  if (vocab_size <= static_cast<std::size_t>(Tokenizer::kSpecialCount))
    fail("vocab_size must exceed the special tokens");
  if (max_segment_len < 1) fail("max_segment_len must be at least 1");
  if (max_decode_len < 2) fail("max_decode_len must be at least 2");
  if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must be in [0, 1)");
}

std::string ModelConfig::to_json() const {
  json j;
  j["layers"] = layers;
  j["heads"] = heads;
  j["d_model"] = d_model;
  j["d_ff"] = d_ff;
  j["vocab_size"] = vocab_size;
  j["max_segment_len"] = max_segment_len;
  j["max_decode_len"] = max_decode_len;
  j["gate_init"] = gate_init;
  j["dropout"] = dropout;
  j["bilevel_pe"] = bilevel_pe;
  j["retentive"] = retentive;
  return j.dump(2);
}

ModelConfig ModelConfig::from_json(std::string_view text) {
  ModelConfig c;
  try {
    auto j = json::parse(text);
    if (!j.is_object()) throw ConfigError("model config: expected an object");
    for (auto& [key, value] : j.items()) {
      if (key == "layers") c.layers = value.get<std::size_t>();
      else if (key == "heads") c.heads = value.get<std::size_t>();
      else if (key == "d_model") c.d_model = value.get<std::size_t>();
      else if (key == "d_ff") c.d_ff = value.get<std::size_t>();
      else if (key == "vocab_size") c.vocab_size = value.get<std::size_t>();
      else if (key == "max_segment_len") c.max_segment_len = value.get<std::size_t>();
      else if (key == "max_decode_len") c.max_decode_len = value.get<std::size_t>();
      else if (key == "gate_init") c.gate_init = value.get<double>();
      else if (key == "dropout") c.dropout = value.get<double>();
      else if (key == "bilevel_pe") c.bilevel_pe = value.get<bool>();
      else if (key == "retentive") c.retentive = value.get<bool>();
      else throw ConfigError("model config: unknown key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
  return c;
}

std::size_t SegmentedInput::total_tokens() const {
  std::size_t n = 0;
  for (const auto& s : segments) n += s.tokens.size();
  return n;
}

SegmentedInput segment_input(const Tokenizer& tokenizer, std::string_view input,
                             std::size_t max_len) {
  if (max_len < 1) throw ValidationError("segment_input: max_len must be positive");
  SegmentedInput out;
  std::size_t section = 0, offset = 0;
  for (const auto& line : text::split(input, kSegmentBreak)) {
    auto words = input_words(line);
    if (words.empty()) continue;
    for (std::size_t start = 0; start < words.size(); start += max_len) {
      Segment seg;
      seg.section = section;
      seg.offset = offset;
      for (std::size_t i = start; i < words.size() && i < start + max_len; ++i)
        seg.tokens.push_back(tokenizer.id(words[i]));
      offset += seg.tokens.size();
      out.segments.push_back(std::move(seg));
    }
    ++section;
  }
  return out;
}

std::vector<std::size_t> token_positions(const Segment& seg, bool bilevel) {
  std::vector<std::size_t> pos(seg.tokens.size());
  for (std::size_t j = 0; j < pos.size(); ++j) pos[j] = (bilevel ? 0 : seg.offset) + j + 1;
  return pos;
}

std::vector<double> sinusoid(std::size_t position, std::size_t dim) {
  std::vector<double> e(dim);
  for (std::size_t i = 0; i < dim; i += 2) {
    double angle = static_cast<double>(position) *
                   std::pow(10000.0, -static_cast<double>(i) / static_cast<double>(dim));
    e[i] = std::sin(angle);
    if (i + 1 < dim) e[i + 1] = std::cos(angle);
  }
  return e;
}

Tensor positional_encoding(std::span<const std::size_t> positions, std::size_t dim) {
  std::vector<double> data;
  data.reserve(positions.size() * dim);
  for (auto p : positions) {
    auto e = sinusoid(p, dim);
    data.insert(data.end(), e.begin(), e.end());
  }
  return Tensor::from(positions.size(), dim, std::move(data));
}

Tensor rotary_by_section(const Tensor& x, std::size_t section) {
  std::vector<double> pos(x.rows(), static_cast<double>(section));
  return nn::rotary_rows(x, pos);
}

Tensor mha_context(const Tensor& q, const Tensor& k, const Tensor& v, const Tensor& mask) {
  if (q.cols() != k.cols() || k.rows() != v.rows())
    throw ShapeError("mha_context: incompatible q " + q.shape().str() + ", k " +
                     k.shape().str() + ", v " + v.shape().str());
  auto scores = nn::scale(nn::matmul(q, nn::transpose(k)),
                          1.0 / std::sqrt(static_cast<double>(q.cols())));
  if (mask.defined()) scores = nn::add(scores, mask);
  return nn::matmul(nn::softmax_rows(scores), v);
}

RetentiveState RetentiveState::fresh(std::size_t d_k, std::size_t d_v) {
  return {Tensor::zeros(d_k, d_v), Tensor::zeros(1, d_k), 0};
}

Tensor retentive_retrieve(const Tensor& q, const RetentiveState& state) {
  auto sq = nn::elu_plus_one(q);
  auto num = nn::matmul(sq, state.mm);
  auto den = nn::matmul(sq, nn::transpose(state.z));
  return nn::guarded_row_divide(num, den, kRetentiveEps);
}

RetentiveState retentive_update(const Tensor& k, const Tensor& v, const RetentiveState& state) {
  if (k.rows() != v.rows())
    throw ShapeError("retentive_update: k " + k.shape().str() + " vs v " + v.shape().str());
  if (k.rows() == 0) return state;
  auto sk = nn::elu_plus_one(k);
  return {nn::add(state.mm, nn::matmul(nn::transpose(sk), v)),
          nn::add(state.z, nn::sum(sk, nn::Axis::kRows)), state.segments + 1};
}

Tensor inject_history(const Tensor& c, const Tensor& c_new, const Tensor& alpha) {
  if (c.shape() != c_new.shape())
    throw ShapeError("inject_history: " + c.shape().str() + " vs " + c_new.shape().str());
  auto g = nn::sigmoid(alpha);
  return nn::add(nn::mul(g, c_new), nn::mul(nn::sub(constant_ones(), g), c));
}

Tensor multihead_output(const std::vector<Tensor>& heads, const Tensor& w_a) {
  if (heads.empty()) throw ShapeError("multihead_output: no heads");
  for (const auto& h : heads)
    if (h.shape() != heads.front().shape())
      throw ShapeError("multihead_output: head shapes " + heads.front().shape().str() + " and " +
                       h.shape().str());
  return nn::matmul(heads.size() == 1 ? heads.front() : nn::concat_cols(heads), w_a);
}

Tensor& Model::add_param(const std::string& name, Tensor t) {
  t.set_requires_grad(true);
  params_.push_back({name, t});
  return params_.back().tensor;
}

Model::Model(ModelConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  std::mt19937_64 rng(seed);
  const std::size_t d = config_.d_model, ff = config_.d_ff;
  const double sd = 1.0 / std::sqrt(static_cast<double>(d));
  const double sff = 1.0 / std::sqrt(static_cast<double>(ff));
  auto gain = [&](const std::string& n) { return add_param(n, Tensor::full(1, d, 1.0)); };
  auto bias = [&](const std::string& n, std::size_t cols) {
    return add_param(n, Tensor::zeros(1, cols));
  };
  auto weight = [&](const std::string& n, std::size_t rows, std::size_t cols, double s) {
    return add_param(n, Tensor::randn(rows, cols, s, rng));
  };
  auto attention = [&](const std::string& p) {
    return Attention{weight(p + ".wq", d, d, sd), weight(p + ".wk", d, d, sd),
                     weight(p + ".wv", d, d, sd), weight(p + ".wo", d, d, sd)};
  };

  embedding_ = weight("embedding", config_.vocab_size, d, sd);
  for (std::size_t l = 0; l < config_.layers; ++l) {
    const std::string p = "encoder." + std::to_string(l);
    EncoderLayer e;
    e.ln1_g = gain(p + ".ln1.gain");
    e.ln1_b = bias(p + ".ln1.bias", d);
    e.attn = attention(p + ".attn");
    e.alpha = add_param(p + ".attn.alpha", Tensor::full(1, config_.heads, config_.gate_init));
    e.ln2_g = gain(p + ".ln2.gain");
    e.ln2_b = bias(p + ".ln2.bias", d);
    e.w1 = weight(p + ".ff.w1", d, ff, sd);
    e.b1 = bias(p + ".ff.b1", ff);
    e.w2 = weight(p + ".ff.w2", ff, d, sff);
    e.b2 = bias(p + ".ff.b2", d);
    enc_.push_back(e);
  }
  enc_ln_g_ = gain("encoder.ln.gain");
  enc_ln_b_ = bias("encoder.ln.bias", d);
  for (std::size_t l = 0; l < config_.layers; ++l) {
    const std::string p = "decoder." + std::to_string(l);
    DecoderLayer e;
    e.ln1_g = gain(p + ".ln1.gain");
    e.ln1_b = bias(p + ".ln1.bias", d);
    e.self_attn = attention(p + ".self");
    e.ln2_g = gain(p + ".ln2.gain");
    e.ln2_b = bias(p + ".ln2.bias", d);
    e.cross_attn = attention(p + ".cross");
    e.ln3_g = gain(p + ".ln3.gain");
    e.ln3_b = bias(p + ".ln3.bias", d);
    e.w1 = weight(p + ".ff.w1", d, ff, sd);
    e.b1 = bias(p + ".ff.b1", ff);
    e.w2 = weight(p + ".ff.w2", ff, d, sff);
    e.b2 = bias(p + ".ff.b2", d);
    dec_.push_back(e);
  }
  dec_ln_g_ = gain("decoder.ln.gain");
  dec_ln_b_ = bias("decoder.ln.bias", d);
}

const Tensor& Model::param(std::string_view name) const {
  for (const auto& p : params_)
    if (p.name == name) return p.tensor;
  throw ValidationError("model has no parameter '" + std::string(name) + "'");
}

Tensor Model::feed_forward(const Tensor& x, const Tensor& w1, const Tensor& b1, const Tensor& w2,
                           const Tensor& b2) const {
  return nn::add(nn::matmul(nn::gelu(nn::add(nn::matmul(x, w1), b1)), w2), b2);
}

Tensor Model::embed(std::span<const int> ids, std::span<const std::size_t> positions) const {
  for (int id : ids)
    if (id < 0 || static_cast<std::size_t>(id) >= config_.vocab_size)
      throw ValidationError("token id " + std::to_string(id) + " outside the vocabulary");
  auto x = nn::scale(nn::embedding_lookup(embedding_, ids),
                     std::sqrt(static_cast<double>(config_.d_model)));
  return nn::add(x, positional_encoding(positions, config_.d_model));
}

Tensor Model::encode(const SegmentedInput& input, std::mt19937_64* rng) const {
  if (input.total_tokens() == 0) throw ValidationError("encode: empty input");
  const std::size_t heads = config_.heads, dk = config_.head_dim();
  const bool drop = rng != nullptr && config_.dropout > 0.0;
  std::vector<std::vector<RetentiveState>> memory(
      config_.layers, std::vector<RetentiveState>(heads, RetentiveState::fresh(dk, dk)));
  std::vector<Tensor> outputs;
  for (std::size_t s = 0; s < input.segments.size(); ++s) {
    const auto& seg = input.segments[s];
    const std::size_t n = seg.tokens.size();
    if (n == 0) continue;
    const bool last = s + 1 == input.segments.size();
    auto x = embed(seg.tokens, token_positions(seg, config_.bilevel_pe));
    for (std::size_t l = 0; l < config_.layers; ++l) {
      const auto& layer = enc_[l];
      auto h = nn::layer_norm_rows(x, layer.ln1_g, layer.ln1_b);
      auto qs = nn::split_cols(nn::matmul(h, layer.attn.wq), heads);
      auto ks = nn::split_cols(nn::matmul(h, layer.attn.wk), heads);
      auto vs = nn::split_cols(nn::matmul(h, layer.attn.wv), heads);
      std::vector<Tensor> contexts;
      for (std::size_t hd = 0; hd < heads; ++hd) {
        Tensor q = qs[hd], k = ks[hd];
        if (config_.bilevel_pe && seg.section != 0) {
          q = rotary_by_section(q, seg.section);
          k = rotary_by_section(k, seg.section);
        }
        auto c = mha_context(q, k, vs[hd]);
        if (config_.retentive) {
          auto& state = memory[l][hd];
          // A fresh memory reads as zero (the guard in retentive_retrieve).
          auto c_new = state.segments == 0 ? Tensor::zeros(n, dk) : retentive_retrieve(q, state);
          c = inject_history(c, c_new, nn::slice_cols(layer.alpha, hd, 1));
          if (!last) state = retentive_update(k, vs[hd], state);
        }
        contexts.push_back(c);
      }
      auto a = multihead_output(contexts, layer.attn.wo);
      if (drop) a = nn::dropout(a, config_.dropout, *rng);
      x = nn::add(x, a);
      auto f = feed_forward(nn::layer_norm_rows(x, layer.ln2_g, layer.ln2_b), layer.w1, layer.b1,
                            layer.w2, layer.b2);
      if (drop) f = nn::dropout(f, config_.dropout, *rng);
      x = nn::add(x, f);
    }
    outputs.push_back(nn::layer_norm_rows(x, enc_ln_g_, enc_ln_b_));
  }
  return outputs.size() == 1 ? outputs.front() : nn::concat_rows(outputs);
}

Tensor Model::decode_logits(std::span<const int> prefix, const Tensor& memory,
                            std::mt19937_64* rng) const {
  const std::size_t n = prefix.size();
  if (n == 0 || prefix[0] != Tokenizer::kBos)
    throw ValidationError("decoder prefix must start with BOS");
  if (n > config_.max_decode_len)
    throw ValidationError("decoder prefix of length " + std::to_string(n) +
                          " exceeds max_decode_len " + std::to_string(config_.max_decode_len));
  if (memory.cols() != config_.d_model || memory.rows() == 0)
    throw ShapeError("decode: encoder states " + memory.shape().str());
  const std::size_t heads = config_.heads;
  const bool drop = rng != nullptr && config_.dropout > 0.0;
  std::vector<std::size_t> positions(n);
  for (std::size_t j = 0; j < n; ++j) positions[j] = j + 1;
  auto y = embed(prefix, positions);
  auto mask = causal_mask(n);
  for (const auto& layer : dec_) {
    auto h = nn::layer_norm_rows(y, layer.ln1_g, layer.ln1_b);
    auto qs = nn::split_cols(nn::matmul(h, layer.self_attn.wq), heads);
    auto ks = nn::split_cols(nn::matmul(h, layer.self_attn.wk), heads);
    auto vs = nn::split_cols(nn::matmul(h, layer.self_attn.wv), heads);
    std::vector<Tensor> ctx;
    for (std::size_t hd = 0; hd < heads; ++hd) ctx.push_back(mha_context(qs[hd], ks[hd], vs[hd], mask));
    auto a = multihead_output(ctx, layer.self_attn.wo);
    if (drop) a = nn::dropout(a, config_.dropout, *rng);
    y = nn::add(y, a);

    h = nn::layer_norm_rows(y, layer.ln2_g, layer.ln2_b);
    qs = nn::split_cols(nn::matmul(h, layer.cross_attn.wq), heads);
    ks = nn::split_cols(nn::matmul(memory, layer.cross_attn.wk), heads);
    vs = nn::split_cols(nn::matmul(memory, layer.cross_attn.wv), heads);
    ctx.clear();
    for (std::size_t hd = 0; hd < heads; ++hd) ctx.push_back(mha_context(qs[hd], ks[hd], vs[hd]));
    a = multihead_output(ctx, layer.cross_attn.wo);
    if (drop) a = nn::dropout(a, config_.dropout, *rng);
    y = nn::add(y, a);

    auto f = feed_forward(nn::layer_norm_rows(y, layer.ln3_g, layer.ln3_b), layer.w1, layer.b1,
                          layer.w2, layer.b2);
    if (drop) f = nn::dropout(f, config_.dropout, *rng);
    y = nn::add(y, f);
  }
  y = nn::layer_norm_rows(y, dec_ln_g_, dec_ln_b_);
  return nn::matmul(y, nn::transpose(embedding_));
}

Tensor Model::decode_step(std::span<const int> prefix, const Tensor& memory) const {
  auto logits = decode_logits(prefix, memory);
  return nn::slice_rows(logits, logits.rows() - 1, 1);
}

Tensor Model::sequence_loss(const SegmentedInput& input, std::span<const int> target,
                            double smoothing, std::mt19937_64* rng) const {
  auto memory = encode(input, rng);
  std::vector<int> prefix{Tokenizer::kBos};
  prefix.insert(prefix.end(), target.begin(), target.end());
  std::vector<int> labels(target.begin(), target.end());
  labels.push_back(Tokenizer::kEos);
  return nn::cross_entropy_label_smoothed(decode_logits(prefix, memory, rng), labels, smoothing);
}

void Model::save(const std::filesystem::path& path) const {
  nn::save_checkpoint(path, params_);
  auto cfg_path = path;
  cfg_path += ".json";
  std::ofstream out(cfg_path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + cfg_path.string() + " for writing");
  out << config_.to_json() << '\n';
  if (!out) throw IoError("write failed for " + cfg_path.string());
}

Model Model::load(const std::filesystem::path& path) {
  auto cfg_path = path;
  cfg_path += ".json";
  std::ifstream in(cfg_path);
  if (!in) throw MissingArtifactError("model config not found: " + cfg_path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  Model m(ModelConfig::from_json(buf.str()), 0);
  nn::load_checkpoint(path, m.params_);
  return m;
}

std::vector<int> encode_target(const Tokenizer& tokenizer, std::string_view identifier) {
  std::vector<int> ids;
  for (const auto& p : Tokenizer::pieces(identifier)) {
    if (!tokenizer.contains(p))
      throw ValidationError("identifier '" + std::string(identifier) +
                            "' has out-of-vocabulary token '" + p + "'");
    ids.push_back(tokenizer.id(p));
  }
  if (ids.empty()) throw ValidationError("empty identifier");
  return ids;
}

JointLoss loss_joint(const Model& model, const Tokenizer& tokenizer,
                     std::span<const TrainingPair> batch, double smoothing, bool backward_each,
                     std::mt19937_64* rng) {
  if (batch.empty()) throw ValidationError("loss_joint: empty batch");
  const double inv = 1.0 / static_cast<double>(batch.size());
  JointLoss out;
  std::vector<Tensor> terms;
  for (const auto& pair : batch) {
    auto input = segment_input(tokenizer, pair.input_text, model.config().max_segment_len);
    if (input.total_tokens() == 0)
      throw ValidationError("pair for book '" + pair.book_key + "' (" +
                            std::string(kind_name(pair.kind)) + ") has empty input");
    auto target = encode_target(tokenizer, pair.target_id);
    auto loss = nn::scale(model.sequence_loss(input, target, smoothing, rng), inv);
    (is_query_kind(pair.kind) ? out.retrieval : out.indexing) += loss.item();
    if (backward_each)
      nn::backward(loss);
    else
      terms.push_back(loss);
  }
  if (!backward_each) {
    out.total = terms.front();
    for (std::size_t i = 1; i < terms.size(); ++i) out.total = nn::add(out.total, terms[i]);
  }
  return out;
}

}  // namespace bookgr
