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

#include "bookgr/textrank.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "bookgr/error.hpp"
#include "bookgr/text.hpp"

namespace bookgr {
namespace {

// Scores compare equal when they agree to 1e-12; keeps symmetric graphs tied
// regardless of summation order.
long long score_key(double s) { return std::llround(s * 1e12); }

}  // namespace

std::vector<std::string> content_words(std::string_view s) {
  std::vector<std::string> out;
  for (const auto& tok : text::split_whitespace(s)) {
    auto w = text::normalize_word(tok);
    if (!w.empty()) out.push_back(std::move(w));
  }
  return out;
}

PageRankResult pagerank(const std::vector<double>& weights, std::size_t n,
                        const PageRankOptions& options) {
  PageRankResult res;
  if (n == 0) return res;
  if (weights.size() != n * n) throw ValidationError("pagerank: weight matrix size mismatch");
  std::vector<double> out_weight(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out_weight[i] += weights[i * n + j];

  const double d = options.damping;
  std::vector<double> s(n, 1.0 / static_cast<double>(n)), next(n);
  for (int it = 1; it <= options.max_iterations; ++it) {
    double dangling = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      if (out_weight[j] <= 0.0) dangling += s[j];
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j)
        if (out_weight[j] > 0.0) acc += weights[j * n + i] / out_weight[j] * s[j];
      next[i] = (1.0 - d) / static_cast<double>(n) + d * (acc + dangling / static_cast<double>(n));
    }
    double change = 0.0;
    for (std::size_t i = 0; i < n; ++i) change += std::abs(next[i] - s[i]);
    s.swap(next);
    res.iterations = it;
    res.residual = change;
    if (change < options.tolerance) break;
  }
  double total = 0.0;
  for (double x : s) total += x;
  for (double& x : s) x /= total;
  res.scores = std::move(s);
  return res;
}

std::vector<ScoredWord> textrank_word_scores(std::string_view s, std::size_t window,
                                             const PageRankOptions& options) {
  if (window < 2) throw ValidationError("textrank: window must be at least 2");
  auto words = content_words(s);
  std::map<std::string, std::size_t> index;
  std::vector<ScoredWord> nodes;
  std::vector<std::size_t> seq;
  for (std::size_t pos = 0; pos < words.size(); ++pos) {
    auto [it, inserted] = index.emplace(words[pos], nodes.size());
    if (inserted) nodes.push_back({words[pos], 0.0, pos});
    seq.push_back(it->second);
  }
  const std::size_t n = nodes.size();
  if (n == 0) return nodes;
  std::vector<double> w(n * n, 0.0);
  for (std::size_t i = 0; i < seq.size(); ++i)
    for (std::size_t j = i + 1; j < seq.size() && j < i + window; ++j) {
      if (seq[i] == seq[j]) continue;
      w[seq[i] * n + seq[j]] = 1.0;
      w[seq[j] * n + seq[i]] = 1.0;
    }
  auto pr = pagerank(w, n, options);
  for (std::size_t i = 0; i < n; ++i) nodes[i].score = pr.scores[i];
  return nodes;
}

std::vector<std::string> textrank_keywords(std::string_view s, std::size_t top_k,
                                           std::size_t window) {
  if (top_k < 1) throw ValidationError("textrank_keywords: top_k must be positive");
  auto nodes = textrank_word_scores(s, window);
  std::stable_sort(nodes.begin(), nodes.end(), [](const ScoredWord& a, const ScoredWord& b) {
    auto ka = score_key(a.score), kb = score_key(b.score);
    if (ka != kb) return ka > kb;
    return a.first_occurrence < b.first_occurrence;
  });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < nodes.size() && i < top_k; ++i) out.push_back(nodes[i].word);
  return out;
}

double sentence_similarity(const std::vector<std::string>& a,
                           const std::vector<std::string>& b) {
  if (a.empty() || b.empty()) return 0.0;
  std::set<std::string> sa(a.begin(), a.end());
  std::set<std::string> sb(b.begin(), b.end());
  double common = 0.0;
  for (const auto& w : sa)
    if (sb.contains(w)) common += 1.0;
  double denom = std::log(static_cast<double>(a.size())) + std::log(static_cast<double>(b.size()));
  return denom > 0.0 ? common / denom : common;
}

std::string textrank_summary(std::string_view s, std::size_t top_n) {
  if (top_n < 1) throw ValidationError("textrank_summary: top_n must be positive");
  auto sentences = text::split_sentences(s);
  if (sentences.size() <= top_n) return text::join(sentences, " ");
  const std::size_t n = sentences.size();
  std::vector<std::vector<std::string>> words;
  for (const auto& sent : sentences) words.push_back(content_words(sent));
  std::vector<double> w(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) w[i * n + j] = sentence_similarity(words[i], words[j]);
  auto pr = pagerank(w, n);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    auto ka = score_key(pr.scores[a]), kb = score_key(pr.scores[b]);
    if (ka != kb) return ka > kb;
    return a < b;
  });
  order.resize(top_n);
  std::sort(order.begin(), order.end());
  std::vector<std::string> picked;
  for (auto i : order) picked.push_back(sentences[i]);
  return text::join(picked, " ");
}

}  // namespace bookgr
