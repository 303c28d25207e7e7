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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <set>

#include "bookgr/corpus.hpp"
#include "bookgr/error.hpp"
#include "bookgr/identifiers.hpp"
#include "bookgr/kmeans.hpp"
#include "oracles.hpp"

using namespace bookgr;
using bookgr::testing::oracle_paths;

namespace {

double norm(const Vector& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("embedder conventions") {
  Embedder e(64);
  Vector zero = e.embed("");
  CHECK(norm(zero) == 0.0);
  CHECK(norm(e.embed("some text here")) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(e.embed("alpha beta") == e.embed("alpha beta"));

  // Hand-computed term-frequency vector over a 3-word vocabulary.
  Embedder big(4096);
  REQUIRE(std::set<std::size_t>{big.bucket("x"), big.bucket("y"), big.bucket("z")}.size() == 3);
  Vector v = big.embed("x y x z x");
  double n = std::sqrt(3.0 * 3.0 + 1.0 + 1.0);
  CHECK(v[big.bucket("x")] == doctest::Approx(3.0 / n));
  CHECK(v[big.bucket("y")] == doctest::Approx(1.0 / n));
  CHECK(v[big.bucket("z")] == doctest::Approx(1.0 / n));
  Vector t = big.embed("x y"), tt = big.embed("x y x y");
  for (std::size_t i = 0; i < t.size(); ++i) CHECK(t[i] == doctest::Approx(tt[i]));
}

TEST_CASE("hierarchical k-means base cases") {
  std::vector<Vector> one{{1.0, 2.0}};
  auto n1 = hierarchical_kmeans(one, 10, 100, 0);
  REQUIRE(n1.size() == 1);
  CHECK(n1[0].digits == std::vector<int>{0});

  std::vector<Vector> few;
  for (int i = 0; i < 30; ++i) few.push_back({std::sin(i * 1.0), std::cos(i * 0.3)});
  auto nf = hierarchical_kmeans(few, 10, 100, 3);
  for (const auto& num : nf) CHECK(num.digits.size() == 1);

  CHECK_THROWS_AS(hierarchical_kmeans(one, 1, 100, 0), ValidationError);
  CHECK_THROWS_AS(hierarchical_kmeans({}, 2, 100, 0), ValidationError);
}

TEST_CASE("12 points on a line match the exhaustive oracle") {
  std::vector<Vector> items;
  for (int i = 1; i <= 12; ++i) items.push_back({static_cast<double>(i)});
  std::vector<std::vector<int>> expected(12);
  std::vector<std::size_t> all(12);
  for (std::size_t i = 0; i < 12; ++i) all[i] = i;
  oracle_paths(items, all, 3, expected);
  // The oracle splits {1..6} / {7..12}, then each half in thirds.
  CHECK(expected[0] == std::vector<int>{0, 0});
  CHECK(expected[11] == std::vector<int>{1, 1});
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto nums = hierarchical_kmeans(items, 2, 3, seed);
    for (std::size_t i = 0; i < 12; ++i) CHECK(nums[i].digits == expected[i]);
  }
}

TEST_CASE("unsplittable groups are disambiguated") {
  std::vector<Vector> same(25, Vector{1.0, 0.0});
  auto tree = hierarchical_kmeans_tree(same, 10, 10, 1);
  std::set<std::string> rendered;
  for (const auto& n : tree.numbers) rendered.insert(n.render(10));
  CHECK(rendered.size() == 25);
  bool found = false;
  for (const auto& node : tree.nodes) found |= node.unsplittable;
  CHECK(found);
  for (const auto& n : tree.numbers)
    for (int d : n.digits) CHECK(d < 10);
}

TEST_CASE("semantic number rendering is fixed width") {
  SemanticNumber n{{0, 6, 8, 8, 3, 4}};
  CHECK(n.render(10) == "068834");
  SemanticNumber m{{3, 11}};
  CHECK(m.render(12) == "0311");
}

TEST_CASE("identifier construction") {
  Book b;
  b.book_key = "heart";
  b.metadata = {"The Heart of a Boy", "Edmondo De Amicis", "Laird & Lee"};
  Chapter oct;
  oct.title = "October";
  oct.sections = {{"The First Day", "school begins today."},
                  {"Our Master", "the master is kind."}};
  b.chapters = {oct, make_body_chapter("November", "the cold arrives.")};
  IdentifierParams p;
  auto ids = build_identifier_set(b, p);
  CHECK(ids.book_id == "The Heart of a Boy#Edmondo De Amicis#Laird & Lee");
  REQUIRE(ids.chapter_ids.size() == 2);
  CHECK(ids.chapter_ids[0].rfind("The Heart of a Boy#Edmondo De Amicis#Laird & Lee#October#", 0) == 0);
  auto comp = parse_identifier(ids.chapter_ids[0], IdLevel::kChapter);
  CHECK(comp.chapter_title == "October");
  CHECK_FALSE(comp.chapter_number.empty());
  CHECK(ids.section_ids[1][0].rfind(ids.chapter_ids[1] + "#November:body#", 0) == 0);

  Book single;
  single.book_key = "s";
  single.metadata = {"A", "B", "C"};
  single.chapters = {make_body_chapter("D", "text")};
  auto sids = build_identifier_set(single, p);
  CHECK(sids.chapter_ids[0] == "A#B#C#D#0");
  CHECK(sids.section_ids[0][0] == "A#B#C#D#0#D:body#0");

  Book dup = single;
  dup.chapters.push_back(make_body_chapter("D", "text"));
  CHECK_THROWS_WITH_AS(build_identifier_set(dup, p), doctest::Contains("collision"),
                       ValidationError);
}

TEST_CASE("parse_identifier") {
  auto c = parse_identifier("A#B#C", IdLevel::kBook);
  CHECK(c.title == "A");
  CHECK(c.author == "B");
  CHECK(c.publisher == "C");
  auto ch = parse_identifier("A#B#C#D#01", IdLevel::kChapter);
  CHECK(ch.book_id() == "A#B#C");
  CHECK(ch.chapter_title == "D");
  CHECK(ch.chapter_number == "01");
  CHECK_THROWS_AS(parse_identifier("A#B", IdLevel::kBook), ValidationError);
  CHECK_THROWS_AS(parse_identifier("A##C", IdLevel::kBook), ValidationError);
  CHECK_THROWS_AS(parse_identifier("A#B#C", IdLevel::kChapter), ValidationError);
}

TEST_CASE("identifier properties over a synthetic corpus") {
  SynthOptions opt;
  opt.n_books = 30;
  opt.chapters_per_book = {1, 14};
  opt.sections_per_chapter = {0, 5};
  Corpus corpus = synth_corpus(opt);
  IdentifierParams p;
  p.k = 3;
  p.leaf_threshold = 2;
  auto sets = build_identifier_sets(corpus, p);
  CHECK(sets == build_identifier_sets(corpus, p));
  for (std::size_t b = 0; b < sets.size(); ++b) {
    const auto& s = sets[b];
    const Book& book = corpus.books[b];
    auto bc = parse_identifier(s.book_id, IdLevel::kBook);
    CHECK(bc.title == book.metadata.title);
    std::set<std::string> uniq(s.chapter_ids.begin(), s.chapter_ids.end());
    CHECK(uniq.size() == s.chapter_ids.size());
    for (std::size_t c = 0; c < s.chapter_ids.size(); ++c) {
      const auto& cid = s.chapter_ids[c];
      CHECK(cid.size() > s.book_id.size());
      CHECK(cid.rfind(s.book_id + "#", 0) == 0);
      auto cc = parse_identifier(cid, IdLevel::kChapter);
      CHECK(cc.chapter_title == book.chapters[c].title);
      CHECK(cc.chapter_id() == cid);
      for (const auto& sid : s.section_ids[c]) {
        CHECK(sid.rfind(cid + "#", 0) == 0);
        auto sc = parse_identifier(sid, IdLevel::kSection);
        CHECK(sc.chapter_id() == cid);
      }
    }
  }

  auto path = std::filesystem::temp_directory_path() / "bookgr_ids.jsonl";
  save_identifiers(sets, path);
  CHECK(load_identifiers(path) == sets);
}
