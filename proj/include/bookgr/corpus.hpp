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
#include <filesystem>
#include <string>
#include <vector>

namespace bookgr {

// Separator of identifier components; banned inside metadata and titles.
inline constexpr char kIdSeparator = '#';
inline constexpr const char* kBodySuffix = ":body";

struct Metadata {
  std::string title;
  std::string author;
  std::string publisher;

  bool operator==(const Metadata&) const = default;
};

struct Section {
  std::string title;
  std::string text;

  bool operator==(const Section&) const = default;
};

struct Chapter {
  std::string title;
  // For a chapter stored without sections this holds one implicit section
  // titled `title + ":body"` and `body_only` is set.
  std::vector<Section> sections;
  bool body_only = false;

  // Concatenated section texts, single-space joined.
  std::string text() const;
  bool operator==(const Chapter&) const = default;
};

// Chapter whose text is not divided into sections.
Chapter make_body_chapter(std::string title, std::string text);

struct Book {
  std::string book_key;
  Metadata metadata;
  std::vector<Chapter> chapters;

  std::size_t section_count() const;
  bool operator==(const Book&) const = default;
};

struct Corpus {
  std::vector<Book> books;

  const Book* find(const std::string& book_key) const;
  bool operator==(const Corpus&) const = default;
};

// Throws ValidationError naming the offending book and field.
void validate_book(const Book& book);
// Per-book validation plus corpus-wide uniqueness of keys and metadata.
void validate_corpus(const Corpus& corpus);

// One JSON object per line:
//   {"book_key", "title", "author", "publisher",
//    "chapters": [{"title", "sections": [{"title", "text"}]} | {"title", "text"}]}
Corpus load_corpus(const std::filesystem::path& path);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);
std::string book_to_record(const Book& book);
Book book_from_record(const std::string& line, std::size_t line_no);

struct CountRange {
  std::size_t min = 1;
  std::size_t max = 1;
};

struct SynthOptions {
  std::uint64_t seed = 7;
  std::size_t n_books = 10;
  CountRange chapters_per_book{2, 4};
  // A draw of 0 yields a chapter stored without sections.
  CountRange sections_per_chapter{1, 3};
  CountRange words_per_section{20, 40};
  std::size_t topic_words_per_book = 6;
  double topic_rate = 0.3;
  std::size_t chapter_words = 3;
  double chapter_word_rate = 0.15;
};

// Deterministic synthetic corpus: filler words come from a fixed pool and
// every book injects its own topic words (and every chapter its own theme
// words) so that books and chapters are distinguishable by content.
Corpus synth_corpus(const SynthOptions& options);

}  // namespace bookgr
