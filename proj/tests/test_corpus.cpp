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

#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "bookgr/corpus.hpp"
#include "bookgr/error.hpp"
#include "bookgr/text.hpp"

using namespace bookgr;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
  auto dir = fs::temp_directory_path() / "bookgr_test_corpus";
  fs::create_directories(dir);
  return dir / name;
}

void write_lines(const fs::path& p, const std::vector<std::string>& lines) {
  std::ofstream out(p);
  for (const auto& l : lines) out << l << '\n';
}

// Independent structural comparison: walks every field explicitly.
bool deep_equal(const Corpus& a, const Corpus& b) {
  if (a.books.size() != b.books.size()) return false;
  for (std::size_t i = 0; i < a.books.size(); ++i) {
    const Book& x = a.books[i];
    const Book& y = b.books[i];
    if (x.book_key != y.book_key || x.metadata.title != y.metadata.title ||
        x.metadata.author != y.metadata.author ||
        x.metadata.publisher != y.metadata.publisher ||
        x.chapters.size() != y.chapters.size())
      return false;
    for (std::size_t c = 0; c < x.chapters.size(); ++c) {
      const auto& cx = x.chapters[c];
      const auto& cy = y.chapters[c];
      if (cx.title != cy.title || cx.body_only != cy.body_only ||
          cx.sections.size() != cy.sections.size())
        return false;
      for (std::size_t s = 0; s < cx.sections.size(); ++s)
        if (cx.sections[s].title != cy.sections[s].title ||
            cx.sections[s].text != cy.sections[s].text)
          return false;
    }
  }
  return true;
}

const char* kRecord =
    R"({"book_key":"b1","title":"The Heart of a Boy","author":"Edmondo De Amicis",)"
    R"("publisher":"Laird & Lee","chapters":[{"title":"October","sections":)"
    R"([{"title":"The First Day","text":"school begins today."}]},)"
    R"({"title":"November","text":"a chapter without sections."}]})";

}  // namespace

TEST_CASE("empty file loads as empty corpus") {
  auto p = temp_file("empty.jsonl");
  write_lines(p, {});
  CHECK(load_corpus(p).books.empty());
  Corpus empty;
  save_corpus(empty, p);
  CHECK(fs::file_size(p) == 0);
}

TEST_CASE("single record loads field for field") {
  auto p = temp_file("one.jsonl");
  write_lines(p, {kRecord});
  Corpus c = load_corpus(p);
  REQUIRE(c.books.size() == 1);
  const Book& b = c.books[0];
  CHECK(b.book_key == "b1");
  CHECK(b.metadata.title == "The Heart of a Boy");
  CHECK(b.metadata.author == "Edmondo De Amicis");
  CHECK(b.metadata.publisher == "Laird & Lee");
  REQUIRE(b.chapters.size() == 2);
  CHECK(b.chapters[0].sections[0].title == "The First Day");
  CHECK(b.chapters[1].body_only);
  CHECK(b.chapters[1].sections[0].title == "November:body");
  CHECK(b.chapters[1].sections[0].text == "a chapter without sections.");

  auto out = temp_file("one_out.jsonl");
  save_corpus(c, out);
  std::ifstream in(out);
  std::string line;
  std::getline(in, line);
  CHECK(line == kRecord);
}

TEST_CASE("load errors") {
  auto p = temp_file("bad.jsonl");
  SUBCASE("reserved separator") {
    std::string rec = kRecord;
    rec.replace(rec.find("Edmondo"), 7, "Ed#mondo");
    write_lines(p, {rec});
    try {
      load_corpus(p);
      FAIL("expected error");
    } catch (const FormatError& e) {
      CHECK(std::string(e.what()).find("reserved separator in field") != std::string::npos);
      CHECK(e.line() == 1);
    }
  }
  SUBCASE("malformed record reports its line") {
    write_lines(p, {kRecord, "{not json"});
    try {
      load_corpus(p);
      FAIL("expected error");
    } catch (const FormatError& e) {
      CHECK(e.line() == 2);
    }
  }
  SUBCASE("duplicate key") {
    write_lines(p, {kRecord, kRecord});
    CHECK_THROWS_AS(load_corpus(p), FormatError);
  }
  SUBCASE("duplicate metadata triple") {
    std::string rec = kRecord;
    rec.replace(rec.find("\"b1\""), 4, "\"b2\"");
    write_lines(p, {kRecord, rec});
    CHECK_THROWS_WITH_AS(load_corpus(p), doctest::Contains("duplicate metadata"), FormatError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_corpus(temp_file("nope.jsonl")), MissingArtifactError);
  }
}

TEST_CASE("save then load is the identity on a 50-book synthetic corpus") {
  SynthOptions opt;
  opt.n_books = 50;
  opt.sections_per_chapter = {0, 3};
  Corpus c = synth_corpus(opt);
  auto p = temp_file("synth.jsonl");
  save_corpus(c, p);
  Corpus back = load_corpus(p);
  CHECK(deep_equal(c, back));
  auto p2 = temp_file("synth2.jsonl");
  save_corpus(back, p2);
  std::ifstream a(p), b(p2);
  std::string sa((std::istreambuf_iterator<char>(a)), {});
  std::string sb((std::istreambuf_iterator<char>(b)), {});
  CHECK(sa == sb);
}

TEST_CASE("synth_corpus is deterministic and respects ranges") {
  SynthOptions opt;
  opt.seed = 7;
  CHECK(deep_equal(synth_corpus(opt), synth_corpus(opt)));
  opt.seed = 8;
  SynthOptions opt7;
  CHECK_FALSE(deep_equal(synth_corpus(opt), synth_corpus(opt7)));

  SynthOptions one;
  one.n_books = 1;
  one.chapters_per_book = {1, 1};
  one.sections_per_chapter = {1, 1};
  Corpus c1 = synth_corpus(one);
  REQUIRE(c1.books.size() == 1);
  CHECK(c1.books[0].chapters.size() == 1);
  CHECK(c1.books[0].chapters[0].sections.size() == 1);

  SynthOptions many;
  many.n_books = 50;
  many.chapters_per_book = {3, 6};
  many.words_per_section = {10, 15};
  Corpus c = synth_corpus(many);
  CHECK(c.books.size() == 50);
  for (const auto& b : c.books) {
    CHECK(b.chapters.size() >= 3);
    CHECK(b.chapters.size() <= 6);
    for (const auto& ch : b.chapters)
      for (const auto& s : ch.sections) {
        auto n = text::split_whitespace(s.text).size();
        CHECK(n >= 10);
        CHECK(n <= 15);
      }
  }
  CHECK_NOTHROW(validate_corpus(c));
}

TEST_CASE("text helpers") {
  CHECK(text::split_sentences("a b. c d! e? f") ==
        std::vector<std::string>{"a b.", "c d!", "e?", "f"});
  CHECK(text::split_sentences("v1.2 is out.") == std::vector<std::string>{"v1.2 is out."});
  CHECK(text::is_space_normalized("a b c"));
  CHECK_FALSE(text::is_space_normalized(" a"));
  CHECK_FALSE(text::is_space_normalized("a  b"));
  CHECK(text::normalize_word("Hello,") == "hello");
}
