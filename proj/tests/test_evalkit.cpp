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
#include <filesystem>
#include <fstream>
#include <random>

#include "bookgr/error.hpp"
#include "bookgr/evalkit.hpp"
#include "json.hpp"

using namespace bookgr;
using json = nlohmann::json;

namespace {

// Ranks the relevant book at a fixed 1-based position among filler keys.
class FixedRankRanker : public BookRanker {
 public:
  FixedRankRanker(std::map<std::string, std::string> gold, std::size_t position)
      : gold_(std::move(gold)), position_(position) {}
  std::vector<ScoredBook> rank(std::string_view query, DecodeMode) const override {
    std::vector<ScoredBook> out;
    for (std::size_t i = 1; i <= 25; ++i) {
      std::string key = i == position_ ? gold_.at(std::string(query)) : "filler" + std::to_string(i);
      out.push_back({key, 1.0 / static_cast<double>(i), 0.0, 1.0 / static_cast<double>(i)});
    }
    return out;
  }

 private:
  std::map<std::string, std::string> gold_;
  std::size_t position_;
};

EvalRecord at_rank(std::size_t rank) {
  EvalRecord r{"q", "gold", {}};
  for (std::size_t i = 1; i <= std::max<std::size_t>(rank, 25); ++i)
    r.ranked.push_back(i == rank ? "gold" : "other" + std::to_string(i));
  return r;
}

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "bookgr_evalkit";
  std::filesystem::create_directories(dir);
  return dir / name;
}

// Same keys, same array lengths, same value types at every level.
bool same_schema(const json& a, const json& b) {
  if (a.type() != b.type()) {
    return a.is_number() && b.is_number();
  }
  if (a.is_object()) {
    if (a.size() != b.size()) return false;
    for (auto it = a.begin(); it != a.end(); ++it) {
      if (!b.contains(it.key()) || !same_schema(it.value(), b.at(it.key()))) return false;
    }
  }
  if (a.is_array() && !a.empty() && !b.empty()) return same_schema(a[0], b[0]);
  return true;
}

}  // namespace

TEST_CASE("metric hand values") {
  std::vector<EvalRecord> hits = {at_rank(1), at_rank(3), at_rank(12)};
  CHECK(hits_at_k(hits, 10) == 2.0 / 3.0);
  std::vector<EvalRecord> mrr = {at_rank(1), at_rank(2), at_rank(4)};
  CHECK(mrr_at_k(mrr, 20) == doctest::Approx(0.5833333333333334).epsilon(1e-12));
  CHECK(std::abs(mrr_at_k(mrr, 20) - 1.75 / 3.0) < 1e-9);

  std::vector<EvalRecord> one = {at_rank(1)};
  CHECK(hits_at_k(one, 10) == 1.0);
  CHECK(mrr_at_k(one, 20) == 1.0);
  std::vector<EvalRecord> miss = {EvalRecord{"q", "gold", {"a", "b"}}};
  CHECK(hits_at_k(miss, 10) == 0.0);
  std::vector<EvalRecord> late = {at_rank(21)};
  CHECK(mrr_at_k(late, 20) == 0.0);

  CHECK_THROWS_AS(hits_at_k({}, 10), ValidationError);
  CHECK_THROWS_AS(mrr_at_k(one, 0), ValidationError);
  std::vector<EvalRecord> dup = {EvalRecord{"q", "gold", {"a", "a"}}};
  CHECK_THROWS_AS(hits_at_k(dup, 10), ValidationError);
}

TEST_CASE("metric properties") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<EvalRecord> recs;
    auto n = std::uniform_int_distribution<int>(1, 12)(rng);
    for (int i = 0; i < n; ++i) recs.push_back(at_rank(std::uniform_int_distribution<std::size_t>(1, 30)(rng)));
    auto shuffled = recs;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    for (std::size_t k : {1, 5, 10, 20}) {
      CHECK(hits_at_k(recs, k) == doctest::Approx(hits_at_k(shuffled, k)).epsilon(1e-15));
      CHECK(mrr_at_k(recs, k) == doctest::Approx(mrr_at_k(shuffled, k)).epsilon(1e-15));
      CHECK(hits_at_k(recs, k) >= 0.0);
      CHECK(hits_at_k(recs, k) <= 1.0);
      CHECK(mrr_at_k(recs, k) <= mrr_at_k(recs, k + 5));
      CHECK(mrr_at_k(recs, k) <= 1.0);
    }
  }
}

TEST_CASE("evaluate with mock rankers") {
  std::vector<LabeledQuery> queries;
  std::map<std::string, std::string> gold;
  for (int i = 0; i < 9; ++i) {
    queries.push_back({"query " + std::to_string(i), "book" + std::to_string(i % 3),
                       QueryCategory::kSingle});
    gold[queries.back().query] = queries.back().book_key;
  }
  auto first = evaluate(FixedRankRanker(gold, 1), queries, DecodeMode::kParallel, 1);
  CHECK(first.hits_at_10 == 1.0);
  CHECK(first.mrr_at_20 == 1.0);
  auto eleventh = evaluate(FixedRankRanker(gold, 11), queries, DecodeMode::kParallel, 3);
  CHECK(eleventh.hits_at_10 == 0.0);
  CHECK(eleventh.mrr_at_20 == doctest::Approx(1.0 / 11.0).epsilon(1e-15));
  for (std::size_t i = 0; i < queries.size(); ++i) {
    CHECK(eleventh.results[i].query == queries[i]);
    CHECK(eleventh.results[i].rank == 11);
  }
  ExperimentReport a{{}, {}, {evaluate(FixedRankRanker(gold, 4), queries, DecodeMode::kSerial, 1)}};
  ExperimentReport b{{}, {}, {evaluate(FixedRankRanker(gold, 4), queries, DecodeMode::kSerial, 4)}};
  CHECK(render_report(a) == render_report(b));
  CHECK_THROWS_AS(evaluate(FixedRankRanker(gold, 1), {}, DecodeMode::kSerial), ValidationError);
}

TEST_CASE("ablation flags and training-pair counts") {
  CHECK(standard_ablations().size() == 5);
  CHECK(standard_ablations()[0].name() == "full");
  CHECK(standard_ablations()[3].name() == "no_bilevel_pe");
  ModelConfig cfg;
  apply_ablation(standard_ablations()[4], cfg);
  CHECK(cfg.bilevel_pe);
  CHECK_FALSE(cfg.retentive);
  CHECK(parse_mode("serial") == DecodeMode::kSerial);
  CHECK_THROWS_AS(parse_mode("beam"), ConfigError);

  Corpus corpus = synth_corpus({.seed = 7, .n_books = 10});
  auto ids = build_identifier_sets(corpus, {});
  ExtractiveGenerator gen;
  const std::size_t x = 5;
  DataOptions data;
  data.queries_per_category = x;
  auto count = [&](const AblationFlags& f) {
    std::map<std::string, std::size_t> per_book;
    for (const auto& p : build_training_pairs(corpus, ids, f, data, gen)) ++per_book[p.book_key];
    return per_book;
  };
  auto full = count({});
  auto no_ids = count(standard_ablations()[2]);
  auto no_queries = count(standard_ablations()[1]);
  for (const auto& book : corpus.books) {
    const std::size_t c = book.chapters.size(), s = book.section_count();
    CHECK(full[book.book_key] == 3 + c + s + 2 * x);
    CHECK(no_ids[book.book_key] == 1 + 2 * x);
    CHECK(no_queries[book.book_key] == 3 + c + s);
  }
  auto queries = build_query_set(corpus, x, gen);
  CHECK(queries.size() == corpus.books.size() * 2 * x);
}

TEST_CASE("model-backed experiment reports") {
  BenchmarkOptions opt;
  opt.corpus = {.seed = 7, .n_books = 6};
  opt.data.queries_per_category = 2;
  opt.model.layers = 1;
  opt.model.d_model = 32;
  opt.model.d_ff = 64;
  opt.train.epochs = 2;
  opt.decode.book_beam = 4;
  opt.decode.chapter_beam = 4;
  auto result = run_benchmark(opt);
  CHECK(result.books == 6);
  CHECK(result.indexing.results.size() == 6);
  REQUIRE(result.retrieval.modes.size() == 2);
  const auto& par = result.retrieval.modes[0];
  const auto& ser = result.retrieval.modes[1];
  CHECK(par.mode == DecodeMode::kParallel);
  CHECK(ser.mode == DecodeMode::kSerial);
  REQUIRE(par.results.size() == ser.results.size());
  for (std::size_t i = 0; i < par.results.size(); ++i) {
    CHECK(par.results[i].query == ser.results[i].query);
    CHECK(par.results[i].ranked.size() <= 4);
  }
  auto doc = json::parse(render_report(result.retrieval));
  CHECK(same_schema(doc["modes"][0], doc["modes"][1]));
  CHECK(doc["modes"][0]["per_query"].size() == doc["modes"][1]["per_query"].size());
  CHECK(doc["modes"][0]["metrics"].contains("hits@10"));
  CHECK(doc["modes"][0]["metrics"].contains("mrr@20"));
}

TEST_CASE("run_experiment loads artifacts and is deterministic") {
  Corpus corpus = synth_corpus({.seed = 3, .n_books = 4});
  auto ids = build_identifier_sets(corpus, {});
  ExtractiveGenerator gen;
  DataOptions data;
  data.queries_per_category = 1;
  auto pairs = build_training_pairs(corpus, ids, {}, data, gen);
  auto tok = build_vocabulary(corpus, ids, pairs);
  ModelConfig mc;
  mc.layers = 1;
  mc.d_model = 16;
  mc.d_ff = 32;
  mc.heads = 2;
  mc.vocab_size = tok.size();
  Model model(mc, 5);

  ExperimentConfig cfg;
  cfg.identifiers = scratch("ids.jsonl");
  cfg.tokenizer = scratch("vocab.tsv");
  cfg.checkpoint = scratch("model.ckpt");
  cfg.queries = scratch("missing-queries.jsonl");
  std::filesystem::remove(cfg.queries);
  save_identifiers(ids, cfg.identifiers);
  tok.save(cfg.tokenizer);
  model.save(cfg.checkpoint);
  cfg.decode.book_beam = 3;
  cfg.decode.chapter_beam = 3;
  try {
    run_experiment(cfg);
    FAIL("expected a missing-artifact error");
  } catch (const MissingArtifactError& e) {
    CHECK(std::string(e.what()).find("missing-queries.jsonl") != std::string::npos);
  }
  cfg.queries = scratch("queries.jsonl");
  save_queries(build_query_set(corpus, 1, gen), cfg.queries);
  auto first = render_report(run_experiment(cfg));
  cfg.threads = 2;
  CHECK(render_report(run_experiment(cfg)) == first);

  cfg.ablation.use_retentive_attention = false;
  CHECK_THROWS_AS(run_experiment(cfg), ConfigError);
}

TEST_CASE("held-out queries exclude training inputs") {
  std::vector<LabeledQuery> q = {{"a b", "x", QueryCategory::kSingle},
                                 {"c d", "x", QueryCategory::kMulti},
                                 {"e f", "y", QueryCategory::kSingle}};
  std::vector<TrainingPair> pairs = {{"x", InputKind::kQuerySingleChapter, "c d", "X#1"}};
  CHECK(remove_training_overlap(q, pairs) == 1);
  REQUIRE(q.size() == 2);
  CHECK(q[0].query == "a b");
  CHECK(q[1].query == "e f");
}
