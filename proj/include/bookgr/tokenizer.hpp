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

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace bookgr {

// Word-level vocabulary. Words are whitespace-separated and '#' always
// stands alone, so "A#B" is three tokens.
class Tokenizer {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kSep = 3;
  static constexpr int kUnk = 4;
  static constexpr int kSpecialCount = 5;

  // Vocabulary holding only the special tokens.
  Tokenizer();

  // Adds the pieces of every text, in first-seen order.
  static Tokenizer build(const std::vector<std::string>& texts);

  int add(std::string_view token);
  bool contains(std::string_view token) const;
  int id(std::string_view token) const;  // kUnk when absent
  const std::string& token(int id) const;
  std::size_t size() const { return tokens_.size(); }

  static std::vector<std::string> pieces(std::string_view text);
  std::vector<int> encode(std::string_view text) const;
  // Inverse of encode for in-vocabulary text: words inside a '#'-field are
  // joined by single spaces. PAD, BOS and EOS are skipped.
  std::string decode(std::span<const int> ids) const;

  // One "token<TAB>id" line per entry, ids ascending.
  void save(const std::filesystem::path& path) const;
  static Tokenizer load(const std::filesystem::path& path);

  bool operator==(const Tokenizer& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

// Words of free input text as the model sees them: normalized (lowercase,
// edge punctuation stripped) with empty results dropped.
std::vector<std::string> input_words(std::string_view text);

}  // namespace bookgr
