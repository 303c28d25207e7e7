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
#include <functional>
#include <vector>

#include "bookgr/augment.hpp"
#include "bookgr/corpus.hpp"
#include "bookgr/identifiers.hpp"
#include "bookgr/model.hpp"
#include "bookgr/tokenizer.hpp"

namespace bookgr {

// Input words of the corpus and of every pair, plus identifier pieces of
// every level, in that order.
Tokenizer build_vocabulary(const Corpus& corpus, const std::vector<IdentifierSet>& ids,
                           const std::vector<TrainingPair>& pairs);

struct TrainOptions {
  std::size_t epochs = 10;
  std::size_t batch_size = 16;
  double lr = 1e-3;
  double warmup_fraction = 0.1;
  double weight_decay = 0.01;  // matrices only
  double label_smoothing = 0.1;
  double clip_norm = 0.0;      // global gradient norm; 0 disables
  std::uint64_t seed = 0;      // batch order and dropout
};

struct TrainProgress {
  std::size_t epoch = 0;  // 1-based
  std::size_t step = 0;   // optimizer steps so far
  std::size_t total_steps = 0;
  double epoch_loss = 0.0;  // mean per-pair loss over the epoch
  double seconds = 0.0;
};

struct TrainReport {
  std::size_t steps = 0;
  std::vector<double> epoch_losses;
  double seconds = 0.0;
};

// Mini-batch Adam on the joint loss; pairs are reshuffled every epoch.
TrainReport train_model(Model& model, const Tokenizer& tokenizer,
                        const std::vector<TrainingPair>& pairs, const TrainOptions& options,
                        const std::function<void(const TrainProgress&)>& on_epoch = {});

}  // namespace bookgr
