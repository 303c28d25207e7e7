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

#include <memory>
#include <span>
#include <unordered_map>
#include <vector>

#include "bookgr/decode.hpp"
#include "bookgr/model.hpp"

namespace bookgr {

// Incremental decoder for one encoded input. Every prefix it has scored is
// kept in a token tree with its per-layer self-attention keys and values, so
// hypotheses that share a prefix (beams, or a book-id followed by its
// chapter-ids) reuse earlier work. Computes the same function as
// Model::decode_logits without building a graph.
class DecoderSession : public SequenceScorer {
 public:
  DecoderSession(const Model& model, const nn::Tensor& memory);
  ~DecoderSession() override;

  std::vector<double> next_log_probs(std::span<const int> prefix) override;
  std::size_t cached_prefixes() const { return cached_; }

 private:
  struct Node;
  struct Weights;
  Node* extend(const std::vector<Node*>& path, int token);

  const Model& model_;
  std::unique_ptr<Weights> w_;
  std::unique_ptr<Node> root_;
  std::size_t cached_ = 0;
};

}  // namespace bookgr
