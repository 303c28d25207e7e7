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
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bookgr/identifiers.hpp"
#include "bookgr/tokenizer.hpp"

namespace bookgr {

// Source of next-token log-probabilities over the whole vocabulary.
// `prefix` holds the tokens generated so far (BOS implied).
class SequenceScorer {
 public:
  virtual ~SequenceScorer() = default;
  virtual std::vector<double> next_log_probs(std::span<const int> prefix) = 0;
};

struct TrieEntry {
  std::string identifier;
  std::string book_key;
  IdLevel level = IdLevel::kBook;
};

// Token trie over identifiers, each terminated by EOS. A node reached by EOS
// is a leaf carrying the index of its entry.
class PrefixTrie {
 public:
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  static constexpr std::size_t kRoot = 0;

  // Throws ValidationError on an empty list or a duplicate identifier.
  PrefixTrie(std::vector<TrieEntry> entries, const Tokenizer& tokenizer);

  std::size_t node_count() const { return nodes_.size(); }
  const std::map<int, std::size_t>& children(std::size_t node) const;
  std::size_t child(std::size_t node, int token) const;  // kNone when absent
  // Entry index at a leaf, kNone elsewhere.
  std::size_t leaf_entry(std::size_t node) const { return nodes_.at(node).entry; }
  // Smallest entry index below `node`; orders tied hypotheses.
  std::size_t first_entry(std::size_t node) const { return nodes_.at(node).first_entry; }

  const std::vector<TrieEntry>& entries() const { return entries_; }
  const std::vector<int>& entry_tokens(std::size_t entry) const { return tokens_.at(entry); }
  // Identifiers spelled by every root-to-leaf path, depth first.
  std::vector<std::string> enumerate() const;

 private:
  struct Node {
    std::map<int, std::size_t> children;
    std::size_t entry = kNone;
    std::size_t first_entry = kNone;
  };
  std::vector<Node> nodes_;
  std::vector<TrieEntry> entries_;
  std::vector<std::vector<int>> tokens_;  // without EOS
};

// All book-ids of the corpus.
PrefixTrie book_level_trie(const std::vector<IdentifierSet>& sets, const Tokenizer& tokenizer);
// The chapter-ids of one book.
PrefixTrie book_chapter_trie(const IdentifierSet& set, const Tokenizer& tokenizer);
// Chapter-ids of every book together.
PrefixTrie chapter_level_trie(const std::vector<IdentifierSet>& sets, const Tokenizer& tokenizer);

struct BeamOptions {
  std::size_t beam_width = 20;
  // Divide scores by token count (EOS included) when ranking.
  bool length_normalize = false;
};

struct BeamHit {
  std::string identifier;
  std::string book_key;
  double log_likelihood = 0.0;  // sum of chosen-token log-probabilities
  std::size_t entry = 0;
};

// Beam search restricted to trie paths. Each step expands every live
// hypothesis by the children of its node, scored with the full-vocabulary
// log-probabilities, and keeps the best beam_width expansions; those that
// end at a leaf are complete. Stops once no live hypothesis can beat the
// worst of beam_width complete ones. Returns up to beam_width identifiers,
// best first; ties keep trie insertion order.
std::vector<BeamHit> constrained_beam_search(SequenceScorer& scorer, const PrefixTrie& trie,
                                             const BeamOptions& options = {});

struct ScoredBook {
  std::string book_key;
  double s_b = 0.0;
  double s_c = 0.0;
  double combined = 0.0;
  bool operator==(const ScoredBook&) const = default;
};

// Descending combined, then s_b descending, then book_key ascending.
void rank_books(std::vector<ScoredBook>& books);

// s_b = exp(book-id log-likelihood), s_c = number of the book's chapter-ids
// in `chapter_hits`, combined = s_b * s_c. Only books in `book_hits` rank.
std::vector<ScoredBook> aggregate_parallel(const std::vector<BeamHit>& book_hits,
                                           const std::vector<BeamHit>& chapter_hits);

// s_c = sum of exp(log-likelihood) over each book's chapter hits,
// combined = beta * s_b + gamma * s_c.
std::vector<ScoredBook> combine_serial(const std::vector<BeamHit>& book_hits,
                                       const std::map<std::string, std::vector<BeamHit>>& chapter_hits,
                                       double beta, double gamma);

struct SerialOptions {
  BeamOptions book_beam;
  BeamOptions chapter_beam;
  double beta = 1.0;
  double gamma = 0.5;
};

// Book-level search, then a search over each surviving book's own trie.
// Throws ValidationError when a surviving book has no trie.
std::vector<ScoredBook> aggregate_serial(SequenceScorer& scorer, const PrefixTrie& book_trie,
                                         const std::map<std::string, PrefixTrie>& per_book_tries,
                                         const SerialOptions& options = {});

}  // namespace bookgr
