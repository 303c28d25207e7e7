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

#include "bookgr/tokenizer.hpp"

#include <fstream>

#include "bookgr/corpus.hpp"
#include "bookgr/error.hpp"
#include "bookgr/text.hpp"

namespace bookgr {

Tokenizer::Tokenizer() {
  for (const char* s : {"<pad>", "<bos>", "<eos>", "#", "<unk>"}) add(s);
}

Tokenizer Tokenizer::build(const std::vector<std::string>& texts) {
  Tokenizer t;
  for (const auto& s : texts)
    for (const auto& p : pieces(s)) t.add(p);
  return t;
}

int Tokenizer::add(std::string_view token) {
  if (token.empty()) throw ValidationError("tokenizer: empty token");
  auto it = ids_.find(std::string(token));
  if (it != ids_.end()) return it->second;
  int id = static_cast<int>(tokens_.size());
  tokens_.emplace_back(token);
  ids_.emplace(tokens_.back(), id);
  return id;
}

bool Tokenizer::contains(std::string_view token) const {
  return ids_.contains(std::string(token));
}

int Tokenizer::id(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? kUnk : it->second;
}

const std::string& Tokenizer::token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size())
    throw ValidationError("tokenizer: id " + std::to_string(id) + " out of range");
  return tokens_[static_cast<std::size_t>(id)];
}

std::vector<std::string> Tokenizer::pieces(std::string_view s) {
  std::vector<std::string> out;
  for (const auto& word : text::split_whitespace(s)) {
    std::size_t start = 0;
    while (start <= word.size()) {
      auto pos = word.find(kIdSeparator, start);
      if (pos == std::string::npos) pos = word.size();
      if (pos > start) out.push_back(word.substr(start, pos - start));
      if (pos < word.size()) out.emplace_back(1, kIdSeparator);
      start = pos + 1;
    }
  }
  return out;
}

std::vector<int> Tokenizer::encode(std::string_view s) const {
  std::vector<int> ids;
  for (const auto& p : pieces(s)) ids.push_back(id(p));
  return ids;
}

std::string Tokenizer::decode(std::span<const int> ids) const {
  std::string out;
  bool field_start = true;
  for (int id : ids) {
    if (id == kPad || id == kBos || id == kEos) continue;
    if (id == kSep) {
      out += kIdSeparator;
      field_start = true;
      continue;
    }
    if (!field_start) out += ' ';
    out += token(id);
    field_start = false;
  }
  return out;
}

void Tokenizer::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  for (std::size_t i = 0; i < tokens_.size(); ++i) out << tokens_[i] << '\t' << i << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

Tokenizer Tokenizer::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifactError("vocabulary file not found: " + path.string());
  Tokenizer t;
  t.tokens_.clear();
  t.ids_.clear();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto tab = line.rfind('\t');
    if (tab == std::string::npos || tab == 0) throw FormatError(line_no, "expected token<TAB>id");
    std::size_t id = 0;
    try {
      id = std::stoul(line.substr(tab + 1));
    } catch (const std::exception&) {
      throw FormatError(line_no, "bad token id");
    }
    if (id != t.tokens_.size()) throw FormatError(line_no, "token ids must be consecutive");
    if (t.add(line.substr(0, tab)) != static_cast<int>(id))
      throw FormatError(line_no, "duplicate token");
  }
  Tokenizer fresh;
  for (int i = 0; i < kSpecialCount; ++i)
    if (t.tokens_.size() <= static_cast<std::size_t>(i) || t.tokens_[i] != fresh.tokens_[i])
      throw ValidationError("vocabulary file " + path.string() + " lacks the special tokens");
  return t;
}

std::vector<std::string> input_words(std::string_view s) {
  std::vector<std::string> out;
  for (const auto& tok : text::split_whitespace(s)) {
    auto w = text::normalize_word(tok);
    if (!w.empty()) out.push_back(std::move(w));
  }
  return out;
}

}  // namespace bookgr
