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

#include "bookgr/identifiers.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "bookgr/error.hpp"
#include "bookgr/text.hpp"
#include "json.hpp"

namespace bookgr {
namespace {

using json = nlohmann::ordered_json;

std::string join_id(std::initializer_list<std::string_view> parts) {
  std::string out;
  for (auto p : parts) {
    if (!out.empty()) out += kIdSeparator;
    out += p;
  }
  return out;
}

}  // namespace

Embedder::Embedder(std::size_t dimension) : dimension_(dimension) {
  if (dimension == 0) throw ValidationError("Embedder: dimension must be positive");
}

std::size_t Embedder::bucket(std::string_view token) const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : token) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return static_cast<std::size_t>(h % dimension_);
}

Vector Embedder::embed(std::string_view s) const {
  Vector v(dimension_, 0.0);
  for (const auto& tok : text::split_whitespace(s)) v[bucket(tok)] += 1.0;
  double norm = 0.0;
  for (double x : v) norm += x * x;
  if (norm > 0.0) {
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
  }
  return v;
}

std::vector<std::string> IdentifierSet::all_section_ids() const {
  std::vector<std::string> out;
  for (const auto& ch : section_ids) out.insert(out.end(), ch.begin(), ch.end());
  return out;
}

std::string make_book_id(const Metadata& m) {
  return join_id({m.title, m.author, m.publisher});
}

IdentifierSet build_identifier_set(const Book& book, const IdentifierParams& params) {
  validate_book(book);
  Embedder embedder(params.embed_dim);
  IdentifierSet ids;
  ids.book_key = book.book_key;
  ids.book_id = make_book_id(book.metadata);

  std::vector<Vector> chapter_vecs;
  for (const auto& ch : book.chapters) chapter_vecs.push_back(embedder.embed(ch.text()));
  auto chapter_numbers =
      hierarchical_kmeans(chapter_vecs, params.k, params.leaf_threshold, params.seed);

  std::set<std::string> seen_chapters;
  for (std::size_t c = 0; c < book.chapters.size(); ++c) {
    const Chapter& ch = book.chapters[c];
    std::string cid = join_id({ids.book_id, ch.title, chapter_numbers[c].render(params.k)});
    if (!seen_chapters.insert(cid).second)
      throw ValidationError("book '" + book.book_key + "': chapter identifier collision '" +
                            cid + "'");
    std::vector<Vector> section_vecs;
    for (const auto& s : ch.sections) section_vecs.push_back(embedder.embed(s.text));
    auto section_numbers =
        hierarchical_kmeans(section_vecs, params.k, params.leaf_threshold, params.seed);
    std::vector<std::string> sids;
    std::set<std::string> seen_sections;
    for (std::size_t s = 0; s < ch.sections.size(); ++s) {
      std::string sid = join_id({cid, ch.sections[s].title, section_numbers[s].render(params.k)});
      if (!seen_sections.insert(sid).second)
        throw ValidationError("book '" + book.book_key + "': section identifier collision '" +
                              sid + "'");
      sids.push_back(std::move(sid));
    }
    ids.chapter_ids.push_back(std::move(cid));
    ids.section_ids.push_back(std::move(sids));
  }
  return ids;
}

std::vector<IdentifierSet> build_identifier_sets(const Corpus& corpus,
                                                 const IdentifierParams& params) {
  std::vector<IdentifierSet> out;
  out.reserve(corpus.books.size());
  for (const auto& b : corpus.books) out.push_back(build_identifier_set(b, params));
  return out;
}

std::string IdComponents::book_id() const { return join_id({title, author, publisher}); }

std::string IdComponents::chapter_id() const {
  return join_id({title, author, publisher, chapter_title, chapter_number});
}

IdComponents parse_identifier(std::string_view id, IdLevel level) {
  auto fields = text::split(id, kIdSeparator);
  std::size_t expected = level == IdLevel::kBook ? 3 : level == IdLevel::kChapter ? 5 : 7;
  if (fields.size() != expected)
    throw ValidationError("identifier '" + std::string(id) + "' has " +
                          std::to_string(fields.size()) + " fields, expected " +
                          std::to_string(expected));
  for (const auto& f : fields)
    if (f.empty()) throw ValidationError("identifier '" + std::string(id) + "' has an empty field");
  IdComponents c;
  c.title = fields[0];
  c.author = fields[1];
  c.publisher = fields[2];
  if (expected >= 5) {
    c.chapter_title = fields[3];
    c.chapter_number = fields[4];
  }
  if (expected == 7) {
    c.section_title = fields[5];
    c.section_number = fields[6];
  }
  return c;
}

void save_identifiers(const std::vector<IdentifierSet>& sets,
                      const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  for (const auto& s : sets) {
    json rec;
    rec["book_key"] = s.book_key;
    rec["book_id"] = s.book_id;
    rec["chapter_ids"] = s.chapter_ids;
    rec["section_ids"] = s.section_ids;
    out << rec.dump() << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<IdentifierSet> load_identifiers(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifactError("identifier file not found: " + path.string());
  std::vector<IdentifierSet> sets;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      auto rec = json::parse(line);
      IdentifierSet s;
      s.book_key = rec.at("book_key").get<std::string>();
      s.book_id = rec.at("book_id").get<std::string>();
      s.chapter_ids = rec.at("chapter_ids").get<std::vector<std::string>>();
      s.section_ids = rec.at("section_ids").get<std::vector<std::vector<std::string>>>();
      if (s.section_ids.size() != s.chapter_ids.size())
        throw FormatError(line_no, "section_ids must have one list per chapter");
      sets.push_back(std::move(s));
    } catch (const json::exception& e) {
      throw FormatError(line_no, std::string("malformed identifier record: ") + e.what());
    }
  }
  return sets;
}

}  // namespace bookgr
