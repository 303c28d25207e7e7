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

#include "bookgr/augment.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <set>

#include "bookgr/error.hpp"
#include "bookgr/text.hpp"
#include "bookgr/textrank.hpp"
#include "json.hpp"

namespace bookgr {
namespace {

using json = nlohmann::ordered_json;

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string one_line(std::string_view s) {
  std::string out(s);
  std::replace(out.begin(), out.end(), kSegmentBreak, ' ');
  return out;
}

std::string strip_terminal(std::string s) {
  while (!s.empty() && (s.back() == '.' || s.back() == '!' || s.back() == '?')) s.pop_back();
  return s;
}

struct KindInfo {
  InputKind kind;
  std::string_view name;
  IdLevel level;
};

constexpr KindInfo kKinds[] = {
    {InputKind::kKeywords, "keywords", IdLevel::kBook},
    {InputKind::kSummary, "summary", IdLevel::kBook},
    {InputKind::kSectionText, "section_text", IdLevel::kSection},
    {InputKind::kChapterText, "chapter_text", IdLevel::kChapter},
    {InputKind::kWholeText, "whole_text", IdLevel::kBook},
    {InputKind::kQuerySingleChapter, "query_single", IdLevel::kBook},
    {InputKind::kQueryMultiChapter, "query_multi", IdLevel::kBook},
};

const KindInfo& info(InputKind kind) {
  for (const auto& k : kKinds)
    if (k.kind == kind) return k;
  throw ValidationError("unknown input kind");
}

// Sentences of `chapter` sharing a word with `keywords`; all sentences when
// none do.
std::vector<std::string> keyword_sentences(const std::string& chapter,
                                           const std::vector<std::string>& keywords) {
  auto sentences = text::split_sentences(chapter);
  std::set<std::string> keys(keywords.begin(), keywords.end());
  std::vector<std::string> hits;
  for (const auto& s : sentences) {
    for (const auto& w : content_words(s))
      if (keys.contains(w)) {
        hits.push_back(s);
        break;
      }
  }
  return hits.empty() ? sentences : hits;
}

std::string fragment_around(const std::string& sentence, const std::vector<std::string>& keywords,
                            std::size_t width) {
  auto words = text::split_whitespace(strip_terminal(sentence));
  std::set<std::string> keys(keywords.begin(), keywords.end());
  std::size_t centre = 0;
  for (std::size_t i = 0; i < words.size(); ++i)
    if (keys.contains(text::normalize_word(words[i]))) {
      centre = i;
      break;
    }
  std::size_t begin = centre > width / 2 ? centre - width / 2 : 0;
  std::size_t end = std::min(words.size(), begin + width);
  begin = end > width ? std::min(begin, end - width) : 0;
  return text::join(std::vector<std::string>(words.begin() + begin, words.begin() + end), " ");
}

}  // namespace

std::string_view kind_name(InputKind kind) { return info(kind).name; }

InputKind parse_kind(std::string_view name) {
  for (const auto& k : kKinds)
    if (k.name == name) return k.kind;
  throw ValidationError("unknown input kind '" + std::string(name) + "'");
}

IdLevel kind_level(InputKind kind) { return info(kind).level; }

bool is_query_kind(InputKind kind) {
  return kind == InputKind::kQuerySingleChapter || kind == InputKind::kQueryMultiChapter;
}

std::string_view category_name(QueryCategory category) {
  return category == QueryCategory::kSingle ? "single" : "multi";
}

void check_pair_target(const TrainingPair& pair, const IdentifierSet& ids) {
  bool ok = false;
  switch (kind_level(pair.kind)) {
    case IdLevel::kBook:
      ok = pair.target_id == ids.book_id;
      break;
    case IdLevel::kChapter:
      ok = std::find(ids.chapter_ids.begin(), ids.chapter_ids.end(), pair.target_id) !=
           ids.chapter_ids.end();
      break;
    case IdLevel::kSection:
      for (const auto& chapter : ids.section_ids)
        ok = ok || std::find(chapter.begin(), chapter.end(), pair.target_id) != chapter.end();
      break;
  }
  if (!ok)
    throw ValidationError("pair of kind '" + std::string(kind_name(pair.kind)) +
                          "' targets '" + pair.target_id + "', not an identifier of book '" +
                          ids.book_key + "' at that level");
}

std::string chapter_input(const Chapter& chapter) {
  std::vector<std::string> lines;
  for (const auto& s : chapter.sections)
    if (!s.text.empty()) lines.push_back(one_line(s.text));
  return text::join(lines, std::string(1, kSegmentBreak));
}

std::string whole_text(const Book& book, std::size_t chapter_cap) {
  std::vector<std::string> parts;
  std::size_t n = std::min(chapter_cap, book.chapters.size());
  for (std::size_t c = 0; c < n; ++c) {
    auto part = chapter_input(book.chapters[c]);
    if (!part.empty()) parts.push_back(std::move(part));
  }
  return text::join(parts, std::string(1, kSegmentBreak));
}

std::vector<TrainingPair> build_indexing_pairs(const Book& book, const IdentifierSet& ids,
                                               const IndexingOptions& options) {
  if (ids.book_key != book.book_key || ids.chapter_ids.size() != book.chapters.size())
    throw ValidationError("identifier set does not belong to book '" + book.book_key + "'");
  std::vector<TrainingPair> pairs;
  auto add = [&](InputKind kind, std::string input, const std::string& target) {
    pairs.push_back({book.book_key, kind, std::move(input), target});
  };
  add(InputKind::kWholeText, whole_text(book, options.whole_text_chapter_cap), ids.book_id);
  if (!options.identifier_augmentation) return pairs;

  const std::string leading = book.chapters.empty() ? "" : book.chapters.front().text();
  add(InputKind::kKeywords,
      text::join(textrank_keywords(leading, options.keyword_count, options.keyword_window), " "),
      ids.book_id);
  add(InputKind::kSummary, textrank_summary(leading, options.summary_sentences), ids.book_id);
  for (std::size_t c = 0; c < book.chapters.size(); ++c)
    add(InputKind::kChapterText, chapter_input(book.chapters[c]), ids.chapter_ids[c]);
  for (std::size_t c = 0; c < book.chapters.size(); ++c) {
    const auto& sections = book.chapters[c].sections;
    if (ids.section_ids[c].size() != sections.size())
      throw ValidationError("identifier set does not belong to book '" + book.book_key + "'");
    for (std::size_t s = 0; s < sections.size(); ++s)
      add(InputKind::kSectionText, one_line(sections[s].text), ids.section_ids[c][s]);
  }
  return pairs;
}

QueryRequest make_query_request(const Book& book, QueryCategory category, std::size_t count,
                                const QueryOptions& options, std::vector<std::string>* warnings) {
  if (count < 1) throw ValidationError("query count must be at least 1");
  if (book.chapters.empty()) throw ValidationError("book '" + book.book_key + "' has no chapters");
  QueryRequest req;
  req.book_key = book.book_key;
  req.category = category;
  req.count = count;
  const std::size_t n = book.chapters.size();
  if (category == QueryCategory::kMulti && n < 2) {
    if (warnings)
      warnings->push_back("book '" + book.book_key +
                          "' has one chapter; multi-chapter queries use single-chapter content");
    req.chapters.push_back(one_line(book.chapters[0].text()));
    req.content = req.chapters[0];
    return req;
  }
  if (category == QueryCategory::kSingle) {
    std::size_t pick = mix(options.seed ^ fnv1a(book.book_key)) % n;
    req.chapters.push_back(one_line(book.chapters[pick].text()));
    req.content = req.chapters[0];
    return req;
  }
  const std::size_t want = std::clamp<std::size_t>(options.multi_chapters, 2, n);
  std::vector<std::size_t> picks;
  // Evenly spread from first to last chapter.
  for (std::size_t i = 0; i < want; ++i) picks.push_back(i * (n - 1) / (want - 1));
  for (auto c : picks) req.chapters.push_back(one_line(book.chapters[c].text()));
  req.content = text::join(req.chapters, " # ");
  return req;
}

std::vector<std::string> generate_queries(const Book& book, QueryCategory category,
                                          std::size_t count, QueryGenerator& generator,
                                          const QueryOptions& options,
                                          std::vector<std::string>* warnings) {
  auto req = make_query_request(book, category, count, options, warnings);
  const std::string where =
      "book '" + book.book_key + "' (" + std::string(category_name(category)) + ")";
  std::vector<std::string> queries;
  try {
    queries = generator.generate(req);
  } catch (const std::exception& e) {
    throw Error("query generation failed for " + where + ": " + e.what());
  }
  if (queries.size() != count)
    throw Error("query generation for " + where + " returned " + std::to_string(queries.size()) +
                " queries, expected " + std::to_string(count));
  for (auto& q : queries) {
    q = one_line(q);
    if (text::split_whitespace(q).empty())
      throw Error("query generation for " + where + " returned an empty query");
  }
  return queries;
}

std::vector<TrainingPair> build_retrieval_pairs(const Book& book, const IdentifierSet& ids,
                                                std::size_t count, QueryGenerator& generator,
                                                const QueryOptions& options,
                                                std::vector<std::string>* warnings) {
  std::vector<TrainingPair> pairs;
  for (auto [category, kind] : {std::pair{QueryCategory::kSingle, InputKind::kQuerySingleChapter},
                                std::pair{QueryCategory::kMulti, InputKind::kQueryMultiChapter}}) {
    for (auto& q : generate_queries(book, category, count, generator, options, warnings))
      pairs.push_back({book.book_key, kind, std::move(q), ids.book_id});
  }
  return pairs;
}

std::vector<std::string> ExtractiveGenerator::generate(const QueryRequest& req) {
  if (req.chapters.empty()) throw ValidationError("extractive generator: no chapter content");
  std::mt19937_64 rng(mix(options_.seed ^ mix(fnv1a(req.book_key)) ^
                          (static_cast<std::uint64_t>(req.category) + 1) * 0x51ed27ULL));
  struct Source {
    std::vector<std::string> keywords;
    std::vector<std::string> sentences;
  };
  std::vector<Source> sources;
  for (const auto& ch : req.chapters) {
    Source s;
    s.keywords = textrank_keywords(ch, options_.keywords);
    s.sentences = keyword_sentences(ch, s.keywords);
    if (s.sentences.empty()) throw ValidationError("extractive generator: empty chapter");
    sources.push_back(std::move(s));
  }
  auto pick = [&](const Source& s) -> const std::string& {
    return s.sentences[std::uniform_int_distribution<std::size_t>(0, s.sentences.size() - 1)(rng)];
  };
  std::vector<std::string> out;
  for (std::size_t i = 0; i < req.count; ++i) {
    if (sources.size() == 1) {
      out.push_back(strip_terminal(pick(sources[0])));
      continue;
    }
    std::vector<std::string> fragments;
    for (const auto& s : sources)
      fragments.push_back(fragment_around(pick(s), s.keywords, options_.fragment_words));
    out.push_back(text::join(fragments, " "));
  }
  return out;
}

void save_pairs(const std::vector<TrainingPair>& pairs, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  for (const auto& p : pairs) {
    json rec;
    rec["book_key"] = p.book_key;
    rec["kind"] = kind_name(p.kind);
    rec["input_text"] = p.input_text;
    rec["target_id"] = p.target_id;
    out << rec.dump() << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<TrainingPair> load_pairs(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifactError("pair file not found: " + path.string());
  std::vector<TrainingPair> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      auto rec = json::parse(line);
      TrainingPair p;
      p.book_key = rec.at("book_key").get<std::string>();
      p.kind = parse_kind(rec.at("kind").get<std::string>());
      p.input_text = rec.at("input_text").get<std::string>();
      p.target_id = rec.at("target_id").get<std::string>();
      pairs.push_back(std::move(p));
    } catch (const json::exception& e) {
      throw FormatError(line_no, std::string("malformed pair record: ") + e.what());
    } catch (const FormatError&) {
      throw;
    } catch (const ValidationError& e) {
      throw FormatError(line_no, e.what());
    }
  }
  return pairs;
}

void save_queries(const std::vector<LabeledQuery>& queries, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  for (const auto& q : queries) {
    json rec;
    rec["query"] = q.query;
    rec["book_key"] = q.book_key;
    rec["category"] = category_name(q.category);
    out << rec.dump() << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<LabeledQuery> load_queries(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifactError("query file not found: " + path.string());
  std::vector<LabeledQuery> queries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      auto rec = json::parse(line);
      LabeledQuery q;
      q.query = rec.at("query").get<std::string>();
      q.book_key = rec.at("book_key").get<std::string>();
      auto cat = rec.value("category", std::string("single"));
      if (cat != "single" && cat != "multi")
        throw FormatError(line_no, "unknown query category '" + cat + "'");
      q.category = cat == "single" ? QueryCategory::kSingle : QueryCategory::kMulti;
      queries.push_back(std::move(q));
    } catch (const json::exception& e) {
      throw FormatError(line_no, std::string("malformed query record: ") + e.what());
    }
  }
  return queries;
}

}  // namespace bookgr
