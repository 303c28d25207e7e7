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
#include <string_view>
#include <vector>

#include "bookgr/corpus.hpp"
#include "bookgr/kmeans.hpp"

namespace bookgr {

// Hashed term-frequency embedding: whitespace tokens are hashed (FNV-1a)
// into `dimension` buckets and the count vector is L2-normalized. Empty text
// maps to the zero vector.
class Embedder {
 public:
  explicit Embedder(std::size_t dimension = 256);

  Vector embed(std::string_view text) const;
  std::size_t bucket(std::string_view token) const;
  std::size_t dimension() const { return dimension_; }

 private:
  std::size_t dimension_;
};

struct IdentifierParams {
  int k = 10;
  std::size_t leaf_threshold = 100;
  std::uint64_t seed = 0;
  std::size_t embed_dim = 256;
};

struct IdentifierSet {
  std::string book_key;
  std::string book_id;
  std::vector<std::string> chapter_ids;
  // section_ids[c] lists the sections of chapter c in book order.
  std::vector<std::vector<std::string>> section_ids;

  std::vector<std::string> all_section_ids() const;
  bool operator==(const IdentifierSet&) const = default;
};

enum class IdLevel { kBook, kChapter, kSection };

std::string make_book_id(const Metadata& m);

// Throws ValidationError when two chapters (or two sections of one chapter)
// end up with the same identifier.
IdentifierSet build_identifier_set(const Book& book, const IdentifierParams& params);
std::vector<IdentifierSet> build_identifier_sets(const Corpus& corpus,
                                                 const IdentifierParams& params);

struct IdComponents {
  std::string title;
  std::string author;
  std::string publisher;
  std::string chapter_title;
  std::string chapter_number;
  std::string section_title;
  std::string section_number;

  std::string book_id() const;
  std::string chapter_id() const;
  bool operator==(const IdComponents&) const = default;
};

// Splits on '#'; book ids have 3 fields, chapter ids 5, section ids 7.
IdComponents parse_identifier(std::string_view id, IdLevel level);

// One JSON object per line: {"book_key", "book_id", "chapter_ids": [...],
// "section_ids": [[...] per chapter]}.
void save_identifiers(const std::vector<IdentifierSet>& sets,
                      const std::filesystem::path& path);
std::vector<IdentifierSet> load_identifiers(const std::filesystem::path& path);

}  // namespace bookgr
