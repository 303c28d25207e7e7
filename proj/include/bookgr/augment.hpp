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

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

#include "bookgr/corpus.hpp"
#include "bookgr/identifiers.hpp"

namespace bookgr {

enum class InputKind {
  kKeywords,
  kSummary,
  kSectionText,
  kChapterText,
  kWholeText,
  kQuerySingleChapter,
  kQueryMultiChapter,
};

std::string_view kind_name(InputKind kind);
InputKind parse_kind(std::string_view name);
IdLevel kind_level(InputKind kind);
bool is_query_kind(InputKind kind);

// Inputs built from several sections (chapter and whole text) keep one
// section per line; the model encodes each line as its own segment.
inline constexpr char kSegmentBreak = '\n';

struct TrainingPair {
  std::string book_key;
  InputKind kind = InputKind::kWholeText;
  std::string input_text;
  std::string target_id;
  bool operator==(const TrainingPair&) const = default;
};

// Throws ValidationError when target_id is not an identifier of `ids` at
// the level the pair kind dictates.
void check_pair_target(const TrainingPair& pair, const IdentifierSet& ids);

struct IndexingOptions {
  std::size_t whole_text_chapter_cap = 100;
  std::size_t keyword_count = 10;
  std::size_t keyword_window = 2;
  std::size_t summary_sentences = 2;
  // When false only the whole text -> book-id pair is produced.
  bool identifier_augmentation = true;
};

// Whole text of the first min(cap, #chapters) chapters, one section per line.
std::string whole_text(const Book& book, std::size_t chapter_cap);
std::string chapter_input(const Chapter& chapter);

std::vector<TrainingPair> build_indexing_pairs(const Book& book, const IdentifierSet& ids,
                                               const IndexingOptions& options = {});

enum class QueryCategory { kSingle, kMulti };
std::string_view category_name(QueryCategory category);

struct QueryRequest {
  std::string book_key;
  QueryCategory category = QueryCategory::kSingle;
  std::size_t count = 0;
  // Source chapter texts; one for single-chapter requests.
  std::vector<std::string> chapters;
  // Prompt content: the chapter texts, joined by " # " for multi requests.
  std::string content;
};

class QueryGenerator {
 public:
  virtual ~QueryGenerator() = default;
  // Must return exactly request.count non-empty queries.
  virtual std::vector<std::string> generate(const QueryRequest& request) = 0;
};

struct QueryOptions {
  std::size_t multi_chapters = 3;
  // Chooses the single-chapter source chapter.
  std::uint64_t seed = 0;
};

// Chapters feeding a request: one seeded pick for single, first/middle/last
// (up to options.multi_chapters) for multi. A one-chapter book degrades a
// multi request to single content and appends a warning.
QueryRequest make_query_request(const Book& book, QueryCategory category, std::size_t count,
                                const QueryOptions& options,
                                std::vector<std::string>* warnings = nullptr);

std::vector<std::string> generate_queries(const Book& book, QueryCategory category,
                                          std::size_t count, QueryGenerator& generator,
                                          const QueryOptions& options = {},
                                          std::vector<std::string>* warnings = nullptr);

std::vector<TrainingPair> build_retrieval_pairs(const Book& book, const IdentifierSet& ids,
                                                std::size_t count, QueryGenerator& generator,
                                                const QueryOptions& options = {},
                                                std::vector<std::string>* warnings = nullptr);

// Deterministic generator. Single: whole sentences from the chapter that
// contain one of its top TextRank keywords. Multi: one keyword-centred
// fragment per chapter, stitched together.
class ExtractiveGenerator : public QueryGenerator {
 public:
  struct Options {
    std::uint64_t seed = 0;
    std::size_t keywords = 5;
    std::size_t fragment_words = 8;
  };
  ExtractiveGenerator() = default;
  explicit ExtractiveGenerator(Options options) : options_(options) {}
  std::vector<std::string> generate(const QueryRequest& request) override;

 private:
  Options options_;
};

std::string single_chapter_prompt(std::size_t count, std::string_view content);
std::string multi_chapter_prompt(std::size_t count, std::string_view content);

// Parses "1. text" / "2) text" lines; unnumbered non-empty lines are ignored.
std::vector<std::string> parse_numbered_list(std::string_view text);

struct RemoteLlmConfig {
  std::string endpoint;  // http://host[:port]/path
  std::string token;
  std::string model;
  std::chrono::milliseconds timeout{30000};
  std::size_t max_parallel = 4;
  int retries = 3;
  std::chrono::milliseconds backoff{200};
};

// POSTs {"model", "content": prompt} and expects {"content": numbered list}.
class RemoteLlmGenerator : public QueryGenerator {
 public:
  explicit RemoteLlmGenerator(RemoteLlmConfig config);
  ~RemoteLlmGenerator() override;
  std::vector<std::string> generate(const QueryRequest& request) override;

 private:
  std::vector<std::string> attempt(const std::string& prompt, std::size_t count);

  RemoteLlmConfig config_;
  std::string host_;
  std::string path_;
  std::unique_ptr<std::counting_semaphore<>> slots_;
};

// One JSON object per line: {"book_key", "kind", "input_text", "target_id"}.
void save_pairs(const std::vector<TrainingPair>& pairs, const std::filesystem::path& path);
std::vector<TrainingPair> load_pairs(const std::filesystem::path& path);

struct LabeledQuery {
  std::string query;
  std::string book_key;
  QueryCategory category = QueryCategory::kSingle;
  bool operator==(const LabeledQuery&) const = default;
};

// One JSON object per line: {"query", "book_key", "category"}.
void save_queries(const std::vector<LabeledQuery>& queries, const std::filesystem::path& path);
std::vector<LabeledQuery> load_queries(const std::filesystem::path& path);

}  // namespace bookgr
