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

#include "bookgr/decode.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "bookgr/error.hpp"
#include "bookgr/model.hpp"

namespace bookgr {

PrefixTrie::PrefixTrie(std::vector<TrieEntry> entries, const Tokenizer& tokenizer)
    : entries_(std::move(entries)) {
  if (entries_.empty()) throw ValidationError("prefix trie: no identifiers");
  nodes_.emplace_back();
  std::set<std::string> seen;
  for (std::size_t e = 0; e < entries_.size(); ++e) {
    const auto& id = entries_[e].identifier;
    if (!seen.insert(id).second)
      throw ValidationError("prefix trie: duplicate identifier '" + id + "'");
    tokens_.push_back(encode_target(tokenizer, id));
    auto path = tokens_.back();
    path.push_back(Tokenizer::kEos);
    std::size_t node = kRoot;
    nodes_[node].first_entry = std::min(nodes_[node].first_entry, e);
    for (int t : path) {
      auto it = nodes_[node].children.find(t);
      if (it == nodes_[node].children.end()) {
        nodes_.emplace_back();
        it = nodes_[node].children.emplace(t, nodes_.size() - 1).first;
      }
      node = it->second;
      nodes_[node].first_entry = std::min(nodes_[node].first_entry, e);
    }
    nodes_[node].entry = e;
  }
}

const std::map<int, std::size_t>& PrefixTrie::children(std::size_t node) const {
  return nodes_.at(node).children;
}

std::size_t PrefixTrie::child(std::size_t node, int token) const {
  const auto& c = nodes_.at(node).children;
  auto it = c.find(token);
  return it == c.end() ? kNone : it->second;
}

std::vector<std::string> PrefixTrie::enumerate() const {
  std::vector<std::string> out;
  std::vector<std::size_t> stack{kRoot};
  while (!stack.empty()) {
    auto n = stack.back();
    stack.pop_back();
    if (nodes_[n].entry != kNone) out.push_back(entries_[nodes_[n].entry].identifier);
    for (auto it = nodes_[n].children.rbegin(); it != nodes_[n].children.rend(); ++it)
      stack.push_back(it->second);
  }
  return out;
}

PrefixTrie book_level_trie(const std::vector<IdentifierSet>& sets, const Tokenizer& tokenizer) {
  std::vector<TrieEntry> entries;
  for (const auto& s : sets) entries.push_back({s.book_id, s.book_key, IdLevel::kBook});
  return PrefixTrie(std::move(entries), tokenizer);
}

PrefixTrie book_chapter_trie(const IdentifierSet& set, const Tokenizer& tokenizer) {
  std::vector<TrieEntry> entries;
  for (const auto& c : set.chapter_ids) entries.push_back({c, set.book_key, IdLevel::kChapter});
  return PrefixTrie(std::move(entries), tokenizer);
}

PrefixTrie chapter_level_trie(const std::vector<IdentifierSet>& sets,
                              const Tokenizer& tokenizer) {
  std::vector<TrieEntry> entries;
  for (const auto& s : sets)
    for (const auto& c : s.chapter_ids) entries.push_back({c, s.book_key, IdLevel::kChapter});
  return PrefixTrie(std::move(entries), tokenizer);
}

namespace {

struct Hypothesis {
  std::vector<int> tokens;
  std::size_t node = PrefixTrie::kRoot;
  double score = 0.0;
  std::size_t order = 0;  // first entry below the node

  double rank_score(bool normalize) const {
    return normalize ? score / static_cast<double>(tokens.size()) : score;
  }
};

bool better(const Hypothesis& a, const Hypothesis& b, bool normalize) {
  double sa = a.rank_score(normalize), sb = b.rank_score(normalize);
  if (sa != sb) return sa > sb;
  return a.order < b.order;
}

}  // namespace

std::vector<BeamHit> constrained_beam_search(SequenceScorer& scorer, const PrefixTrie& trie,
                                             const BeamOptions& options) {
  if (options.beam_width < 1) throw ValidationError("beam_width must be at least 1");
  const bool norm = options.length_normalize;
  const std::size_t width = options.beam_width;
  std::vector<Hypothesis> live{{{}, PrefixTrie::kRoot, 0.0, trie.first_entry(PrefixTrie::kRoot)}};
  std::vector<Hypothesis> finished;
  while (!live.empty()) {
    std::vector<Hypothesis> expansions;
    for (const auto& h : live) {
      auto lp = scorer.next_log_probs(h.tokens);
      for (const auto& [token, child] : trie.children(h.node)) {
        if (token < 0 || static_cast<std::size_t>(token) >= lp.size())
          throw ValidationError("scorer returned too few log-probabilities");
        Hypothesis next{h.tokens, child, h.score + lp[static_cast<std::size_t>(token)],
                        trie.first_entry(child)};
        next.tokens.push_back(token);
        expansions.push_back(std::move(next));
      }
    }
    std::sort(expansions.begin(), expansions.end(),
              [norm](const Hypothesis& a, const Hypothesis& b) { return better(a, b, norm); });
    if (expansions.size() > width) expansions.resize(width);
    live.clear();
    for (auto& h : expansions) {
      if (trie.leaf_entry(h.node) != PrefixTrie::kNone)
        finished.push_back(std::move(h));
      else
        live.push_back(std::move(h));
    }
    std::sort(finished.begin(), finished.end(),
              [norm](const Hypothesis& a, const Hypothesis& b) { return better(a, b, norm); });
    if (finished.size() > width) finished.resize(width);
    // Log-probabilities are non-positive, so unnormalized scores only fall.
    if (!norm && finished.size() == width && !live.empty() &&
        live.front().score < finished.back().score)
      break;
  }
  std::vector<BeamHit> hits;
  for (const auto& h : finished) {
    auto e = trie.leaf_entry(h.node);
    hits.push_back({trie.entries()[e].identifier, trie.entries()[e].book_key, h.score, e});
  }
  return hits;
}

void rank_books(std::vector<ScoredBook>& books) {
  std::sort(books.begin(), books.end(), [](const ScoredBook& a, const ScoredBook& b) {
    if (a.combined != b.combined) return a.combined > b.combined;
    if (a.s_b != b.s_b) return a.s_b > b.s_b;
    return a.book_key < b.book_key;
  });
}

std::vector<ScoredBook> aggregate_parallel(const std::vector<BeamHit>& book_hits,
                                           const std::vector<BeamHit>& chapter_hits) {
  std::map<std::string, double> covered;
  for (const auto& c : chapter_hits) covered[c.book_key] += 1.0;
  std::vector<ScoredBook> out;
  std::set<std::string> seen;
  for (const auto& b : book_hits) {
    if (!seen.insert(b.book_key).second) continue;
    ScoredBook s;
    s.book_key = b.book_key;
    s.s_b = std::exp(b.log_likelihood);
    auto it = covered.find(b.book_key);
    s.s_c = it == covered.end() ? 0.0 : it->second;
    s.combined = s.s_b * s.s_c;
    out.push_back(std::move(s));
  }
  rank_books(out);
  return out;
}

std::vector<ScoredBook> combine_serial(
    const std::vector<BeamHit>& book_hits,
    const std::map<std::string, std::vector<BeamHit>>& chapter_hits, double beta, double gamma) {
  std::vector<ScoredBook> out;
  std::set<std::string> seen;
  for (const auto& b : book_hits) {
    if (!seen.insert(b.book_key).second) continue;
    ScoredBook s;
    s.book_key = b.book_key;
    s.s_b = std::exp(b.log_likelihood);
    auto it = chapter_hits.find(b.book_key);
    if (it != chapter_hits.end()) {
      // Summed in a fixed order so the result does not depend on how the
      // per-book searches were scheduled.
      std::vector<double> probs;
      for (const auto& c : it->second) probs.push_back(std::exp(c.log_likelihood));
      std::sort(probs.begin(), probs.end());
      for (double p : probs) s.s_c += p;
    }
    s.combined = beta * s.s_b + gamma * s.s_c;
    out.push_back(std::move(s));
  }
  rank_books(out);
  return out;
}

std::vector<ScoredBook> aggregate_serial(SequenceScorer& scorer, const PrefixTrie& book_trie,
                                         const std::map<std::string, PrefixTrie>& per_book_tries,
                                         const SerialOptions& options) {
  auto book_hits = constrained_beam_search(scorer, book_trie, options.book_beam);
  std::map<std::string, std::vector<BeamHit>> chapter_hits;
  for (const auto& b : book_hits) {
    auto it = per_book_tries.find(b.book_key);
    if (it == per_book_tries.end())
      throw ValidationError("no chapter trie for book '" + b.book_key + "'");
    chapter_hits[b.book_key] = constrained_beam_search(scorer, it->second, options.chapter_beam);
  }
  return combine_serial(book_hits, chapter_hits, options.beta, options.gamma);
}

}  // namespace bookgr
