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

#include "bookgr/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include "bookgr/error.hpp"
#include "bookgr/optim.hpp"

namespace bookgr {

Tokenizer build_vocabulary(const Corpus& corpus, const std::vector<IdentifierSet>& ids,
                           const std::vector<TrainingPair>& pairs) {
  Tokenizer t;
  auto add_words = [&](std::string_view s) {
    for (const auto& w : input_words(s)) t.add(w);
  };
  for (const auto& b : corpus.books)
    for (const auto& c : b.chapters)
      for (const auto& s : c.sections) add_words(s.text);
  for (const auto& p : pairs) add_words(p.input_text);
  auto add_id = [&](const std::string& id) {
    for (const auto& p : Tokenizer::pieces(id)) t.add(p);
  };
  for (const auto& s : ids) {
    add_id(s.book_id);
    for (const auto& c : s.chapter_ids) add_id(c);
    for (const auto& sec : s.all_section_ids()) add_id(sec);
  }
  return t;
}

TrainReport train_model(Model& model, const Tokenizer& tokenizer,
                        const std::vector<TrainingPair>& pairs, const TrainOptions& options,
                        const std::function<void(const TrainProgress&)>& on_epoch) {
  if (pairs.empty()) throw ValidationError("train: no training pairs");
  if (options.batch_size < 1) throw ConfigError("train: batch_size must be at least 1");
  if (tokenizer.size() != model.config().vocab_size)
    throw ValidationError("train: vocabulary has " + std::to_string(tokenizer.size()) +
                          " tokens but the model expects " +
                          std::to_string(model.config().vocab_size));
  const auto start = std::chrono::steady_clock::now();
  std::vector<nn::Adam::Param> params;
  for (auto& p : model.parameters()) params.push_back({p.tensor, p.tensor.rows() > 1});
  nn::AdamConfig adam_cfg;
  adam_cfg.weight_decay = options.weight_decay;
  nn::Adam adam(params, adam_cfg);

  const std::size_t batches = (pairs.size() + options.batch_size - 1) / options.batch_size;
  const std::size_t total = batches * options.epochs;
  std::mt19937_64 rng(options.seed);
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);

  TrainReport report;
  std::vector<TrainingPair> batch;
  for (std::size_t epoch = 1; epoch <= options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_sum = 0.0;
    for (std::size_t b = 0; b < batches; ++b) {
      batch.clear();
      for (std::size_t i = b * options.batch_size;
           i < std::min(pairs.size(), (b + 1) * options.batch_size); ++i)
        batch.push_back(pairs[order[i]]);
      auto loss = loss_joint(model, tokenizer, batch, options.label_smoothing, true, &rng);
      epoch_sum += (loss.indexing + loss.retrieval) * static_cast<double>(batch.size());
      if (options.clip_norm > 0.0) {
        double sq = 0.0;
        for (const auto& p : params)
          for (double g : p.tensor.grad()) sq += g * g;
        double norm = std::sqrt(sq);
        if (norm > options.clip_norm) {
          double f = options.clip_norm / norm;
          for (auto& p : params) {
            auto t = p.tensor;
            if (t.grad().empty()) continue;
            for (double& g : t.mutable_grad()) g *= f;
          }
        }
      }
      ++report.steps;
      adam.step(nn::warmup_lr(options.lr, static_cast<std::int64_t>(report.steps),
                              static_cast<std::int64_t>(total), options.warmup_fraction));
    }
    report.epoch_losses.push_back(epoch_sum / static_cast<double>(pairs.size()));
    report.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (on_epoch)
      on_epoch({epoch, report.steps, total, report.epoch_losses.back(), report.seconds});
  }
  return report;
}

}  // namespace bookgr
