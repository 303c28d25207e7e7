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

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bookgr/augment.hpp"
#include "bookgr/decode.hpp"
#include "bookgr/identifiers.hpp"
#include "bookgr/model.hpp"
#include "bookgr/tokenizer.hpp"
#include "bookgr/train.hpp"

namespace bookgr {

// One evaluated query: the relevant book and the system's ranking.
struct EvalRecord {
  std::string query;
  std::string relevant;
  std::vector<std::string> ranked;
};

// 1-based position of the relevant book in `ranked`, 0 when absent. Throws
// ValidationError if `ranked` repeats a key.
std::size_t relevant_rank(const EvalRecord& record);

double hits_at_k(std::span<const EvalRecord> records, std::size_t k);
double mrr_at_k(std::span<const EvalRecord> records, std::size_t k);

struct AblationFlags {
  bool use_query_augmentation = true;
  bool use_identifier_augmentation = true;
  bool use_bilevel_pe = true;
  bool use_retentive_attention = true;

  // "full", or the disabled flags joined by '+', e.g. "no_bilevel_pe".
  std::string name() const;
  bool operator==(const AblationFlags&) const = default;
};

// The full system followed by the four single-flag ablations.
std::vector<AblationFlags> standard_ablations();

// Sets the model wiring switches the flags control.
void apply_ablation(const AblationFlags& flags, ModelConfig& config);

struct DataOptions {
  std::size_t queries_per_category = 5;
  IndexingOptions indexing;
  QueryOptions queries;
};

// Indexing pairs (whole text only when identifier augmentation is off) plus,
// when query augmentation is on, X single- and X multi-chapter query pairs
// per book. Books keep corpus order; within a book indexing pairs come first.
std::vector<TrainingPair> build_training_pairs(const Corpus& corpus,
                                               const std::vector<IdentifierSet>& ids,
                                               const AblationFlags& flags,
                                               const DataOptions& options,
                                               QueryGenerator& generator,
                                               std::vector<std::string>* warnings = nullptr);

// X single- and X multi-chapter labelled queries per book.
std::vector<LabeledQuery> build_query_set(const Corpus& corpus, std::size_t per_category,
                                          QueryGenerator& generator,
                                          const QueryOptions& options = {},
                                          std::vector<std::string>* warnings = nullptr);

// Drops queries whose text equals the input of some training pair; returns
// how many were dropped.
std::size_t remove_training_overlap(std::vector<LabeledQuery>& queries,
                                    const std::vector<TrainingPair>& pairs);

// kBook ranks by the book-level beam alone (s_c = 0).
enum class DecodeMode { kParallel, kSerial, kBook };

std::string_view mode_name(DecodeMode mode);
DecodeMode parse_mode(std::string_view name);

struct DecodeOptions {
  std::size_t book_beam = 20;
  std::size_t chapter_beam = 20;
  double beta = 1.0;
  double gamma = 0.5;
};

class BookRanker {
 public:
  virtual ~BookRanker() = default;
  // Must be safe to call concurrently.
  virtual std::vector<ScoredBook> rank(std::string_view query, DecodeMode mode) const = 0;
};

// Ranks books by constrained decoding with a trained model.
class ModelRanker : public BookRanker {
 public:
  ModelRanker(const Model& model, const Tokenizer& tokenizer,
              const std::vector<IdentifierSet>& ids, DecodeOptions options = {});
  std::vector<ScoredBook> rank(std::string_view query, DecodeMode mode) const override;

 private:
  const Model& model_;
  const Tokenizer& tokenizer_;
  DecodeOptions options_;
  PrefixTrie book_trie_;
  PrefixTrie chapter_trie_;
  std::map<std::string, PrefixTrie> per_book_;
};

struct QueryResult {
  LabeledQuery query;
  std::vector<ScoredBook> ranked;
  std::size_t rank = 0;  // 0 when the relevant book was not ranked
};

struct ModeReport {
  DecodeMode mode = DecodeMode::kParallel;
  std::vector<QueryResult> results;
  double hits_at_1 = 0.0;
  double hits_at_10 = 0.0;
  double mrr_at_20 = 0.0;
};

// Ranks every query (on up to `threads` workers; 0 = hardware concurrency)
// and scores the results. Output does not depend on the thread count.
ModeReport evaluate(const BookRanker& ranker, const std::vector<LabeledQuery>& queries,
                    DecodeMode mode, std::size_t threads = 0);

struct ExperimentReport {
  AblationFlags ablation;
  DecodeOptions decode;
  std::vector<ModeReport> modes;
};

// Stable JSON rendering; per-query rows list the top `top_n` books.
std::string render_report(const ExperimentReport& report, std::size_t top_n = 10);

struct ExperimentConfig {
  std::filesystem::path identifiers;
  std::filesystem::path tokenizer;
  std::filesystem::path checkpoint;
  std::filesystem::path queries;
  std::vector<DecodeMode> modes{DecodeMode::kParallel, DecodeMode::kSerial};
  DecodeOptions decode;
  AblationFlags ablation;
  std::size_t threads = 0;
};

// Loads the artifacts and evaluates the query file under each mode. Missing
// files raise MissingArtifactError naming the file; a checkpoint whose wiring
// disagrees with the ablation flags raises ConfigError.
ExperimentReport run_experiment(const ExperimentConfig& config);

struct BenchmarkOptions {
  SynthOptions corpus{.seed = 7, .n_books = 50};
  IdentifierParams identifier_params;
  DataOptions data;
  ModelConfig model;  // vocab_size is filled in from the data
  std::uint64_t model_seed = 1;
  TrainOptions train;
  DecodeOptions decode;
  AblationFlags ablation;
  std::size_t threads = 0;
};

struct BenchmarkResult {
  std::size_t books = 0;
  std::size_t training_pairs = 0;
  TrainReport training;
  // Whole-text inputs ranked by the book-level beam (kBook mode).
  ModeReport indexing;
  // Held-in pseudo-queries under the parallel and serial modes.
  ExperimentReport retrieval;
};

// Synthesizes a corpus, trains from scratch and evaluates in memory.
BenchmarkResult run_benchmark(const BenchmarkOptions& options,
                              const std::function<void(const TrainProgress&)>& on_epoch = {});

}  // namespace bookgr
