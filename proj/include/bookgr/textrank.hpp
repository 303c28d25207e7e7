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

#include <string>
#include <string_view>
#include <vector>

namespace bookgr {

struct PageRankOptions {
  double damping = 0.85;
  double tolerance = 1e-6;  // L1 change between iterations
  int max_iterations = 100;
};

struct PageRankResult {
  std::vector<double> scores;  // non-negative, sums to 1
  int iterations = 0;
  double residual = 0.0;  // L1 change of the last iteration
};

// Weighted PageRank over a symmetric adjacency matrix (row-major n x n).
// Nodes without edges spread their mass uniformly.
PageRankResult pagerank(const std::vector<double>& weights, std::size_t n,
                        const PageRankOptions& options = {});

struct ScoredWord {
  std::string word;
  double score = 0.0;
  std::size_t first_occurrence = 0;
};

// Co-occurrence graph over distinct normalized words:
// two words are linked when they appear within `window` positions.
std::vector<ScoredWord> textrank_word_scores(std::string_view text, std::size_t window,
                                             const PageRankOptions& options = {});

// Top `top_k` words by score; ties keep first-occurrence order.
std::vector<std::string> textrank_keywords(std::string_view text, std::size_t top_k,
                                           std::size_t window = 2);

// TextRank sentence similarity: shared distinct words divided by
// log|a| + log|b| (the raw overlap when that denominator is not positive).
double sentence_similarity(const std::vector<std::string>& a,
                           const std::vector<std::string>& b);

// Highest-scoring `top_n` sentences, re-emitted in original order.
std::string textrank_summary(std::string_view text, std::size_t top_n);

// Normalized words of `text` in order; empty normalizations dropped.
std::vector<std::string> content_words(std::string_view text);

}  // namespace bookgr
