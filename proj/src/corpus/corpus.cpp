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

#include "bookgr/corpus.hpp"

#include <fstream>
#include <set>
#include <tuple>

#include "bookgr/error.hpp"
#include "bookgr/text.hpp"
#include "json.hpp"

namespace bookgr {
namespace {

using json = nlohmann::ordered_json;

void check_id_field(const std::string& value, const std::string& field,
                    const std::string& book_key) {
  if (value.empty())
    throw ValidationError("book '" + book_key + "': empty field '" + field + "'");
  if (value.find(kIdSeparator) != std::string::npos)
    throw ValidationError("book '" + book_key + "': reserved separator in field '" +
                          field + "'");
  if (!text::is_space_normalized(value))
    throw ValidationError("book '" + book_key + "': field '" + field +
                          "' has leading, trailing or repeated whitespace");
}

const json& require(const json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end())
    throw FormatError(line, std::string("missing field '") + key + "'");
  return *it;
}

std::string require_string(const json& obj, const char* key, std::size_t line) {
  const json& v = require(obj, key, line);
  if (!v.is_string())
    throw FormatError(line, std::string("field '") + key + "' is not a string");
  return v.get<std::string>();
}

}  // namespace

std::string Chapter::text() const {
  std::string out;
  for (const auto& s : sections) {
    if (!out.empty()) out += ' ';
    out += s.text;
  }
  return out;
}

Chapter make_body_chapter(std::string title, std::string body) {
  Chapter c;
  c.sections.push_back({title + kBodySuffix, std::move(body)});
  c.title = std::move(title);
  c.body_only = true;
  return c;
}

std::size_t Book::section_count() const {
  std::size_t n = 0;
  for (const auto& c : chapters) n += c.sections.size();
  return n;
}

const Book* Corpus::find(const std::string& book_key) const {
  for (const auto& b : books)
    if (b.book_key == book_key) return &b;
  return nullptr;
}

void validate_book(const Book& book) {
  if (book.book_key.empty()) throw ValidationError("book with empty book_key");
  check_id_field(book.metadata.title, "title", book.book_key);
  check_id_field(book.metadata.author, "author", book.book_key);
  check_id_field(book.metadata.publisher, "publisher", book.book_key);
  if (book.chapters.empty())
    throw ValidationError("book '" + book.book_key + "': no chapters");
  for (const auto& ch : book.chapters) {
    check_id_field(ch.title, "chapter title", book.book_key);
    if (ch.sections.empty())
      throw ValidationError("book '" + book.book_key + "': chapter '" + ch.title +
                            "' has no text");
    if (ch.body_only && (ch.sections.size() != 1 ||
                         ch.sections[0].title != ch.title + kBodySuffix))
      throw ValidationError("book '" + book.book_key + "': chapter '" + ch.title +
                            "' has a malformed body section");
    for (const auto& s : ch.sections) {
      check_id_field(s.title, "section title", book.book_key);
      if (s.text.empty())
        throw ValidationError("book '" + book.book_key + "': section '" + s.title +
                              "' has empty text");
    }
  }
}

void validate_corpus(const Corpus& corpus) {
  std::set<std::string> keys;
  std::set<std::tuple<std::string, std::string, std::string>> triples;
  for (const auto& b : corpus.books) {
    validate_book(b);
    if (!keys.insert(b.book_key).second)
      throw ValidationError("duplicate book_key '" + b.book_key + "'");
    if (!triples.emplace(b.metadata.title, b.metadata.author, b.metadata.publisher).second)
      throw ValidationError("duplicate metadata triple for book '" + b.book_key + "'");
  }
}

std::string book_to_record(const Book& book) {
  json rec;
  rec["book_key"] = book.book_key;
  rec["title"] = book.metadata.title;
  rec["author"] = book.metadata.author;
  rec["publisher"] = book.metadata.publisher;
  json chapters = json::array();
  for (const auto& ch : book.chapters) {
    json c;
    c["title"] = ch.title;
    if (ch.body_only) {
      c["text"] = ch.sections.at(0).text;
    } else {
      json sections = json::array();
      for (const auto& s : ch.sections) {
        json sj;
        sj["title"] = s.title;
        sj["text"] = s.text;
        sections.push_back(std::move(sj));
      }
      c["sections"] = std::move(sections);
    }
    chapters.push_back(std::move(c));
  }
  rec["chapters"] = std::move(chapters);
  return rec.dump();
}

Book book_from_record(const std::string& line, std::size_t line_no) {
  json rec;
  try {
    rec = json::parse(line);
  } catch (const json::parse_error& e) {
    throw FormatError(line_no, std::string("malformed record: ") + e.what());
  }
  if (!rec.is_object()) throw FormatError(line_no, "record is not an object");
  Book book;
  book.book_key = require_string(rec, "book_key", line_no);
  book.metadata.title = require_string(rec, "title", line_no);
  book.metadata.author = require_string(rec, "author", line_no);
  book.metadata.publisher = require_string(rec, "publisher", line_no);
  const json& chapters = require(rec, "chapters", line_no);
  if (!chapters.is_array()) throw FormatError(line_no, "field 'chapters' is not an array");
  for (const auto& cj : chapters) {
    if (!cj.is_object()) throw FormatError(line_no, "chapter is not an object");
    std::string title = require_string(cj, "title", line_no);
    bool has_sections = cj.contains("sections");
    bool has_text = cj.contains("text");
    if (has_sections == has_text)
      throw FormatError(line_no, "chapter '" + title +
                                     "' needs exactly one of 'sections' or 'text'");
    if (has_text) {
      book.chapters.push_back(make_body_chapter(title, require_string(cj, "text", line_no)));
      continue;
    }
    Chapter ch;
    ch.title = std::move(title);
    const json& sections = cj["sections"];
    if (!sections.is_array()) throw FormatError(line_no, "field 'sections' is not an array");
    for (const auto& sj : sections) {
      if (!sj.is_object()) throw FormatError(line_no, "section is not an object");
      ch.sections.push_back(
          {require_string(sj, "title", line_no), require_string(sj, "text", line_no)});
    }
    book.chapters.push_back(std::move(ch));
  }
  try {
    validate_book(book);
  } catch (const ValidationError& e) {
    throw FormatError(line_no, e.what());
  }
  return book;
}

Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifactError("corpus file not found: " + path.string());
  Corpus corpus;
  std::set<std::string> keys;
  std::set<std::tuple<std::string, std::string, std::string>> triples;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    Book b = book_from_record(line, line_no);
    if (!keys.insert(b.book_key).second)
      throw FormatError(line_no, "duplicate book_key '" + b.book_key + "'");
    if (!triples.emplace(b.metadata.title, b.metadata.author, b.metadata.publisher).second)
      throw FormatError(line_no, "duplicate metadata triple for book '" + b.book_key + "'");
    corpus.books.push_back(std::move(b));
  }
  return corpus;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  validate_corpus(corpus);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  for (const auto& b : corpus.books) out << book_to_record(b) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace bookgr
