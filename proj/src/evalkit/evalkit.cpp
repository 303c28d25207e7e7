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

#include "bookgr/evalkit.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <set>
#include <thread>

#include "bookgr/error.hpp"
#include "bookgr/inference.hpp"
#include "json.hpp"

namespace bookgr {

using json = nlohmann::ordered_json;

std::size_t relevant_rank(const EvalRecord& record) {
  std::set<std::string_view> seen;
  std::size_t rank = 0;
  for (std::size_t i = 0; i < record.ranked.size(); ++i) {
    if (!seen.insert(record.ranked[i]).second)
      throw ValidationError("ranking for query '" + record.query + "' repeats '" +
                            record.ranked[i] + "'");
    if (rank == 0 && record.ranked[i] == record.relevant) rank = i + 1;
  }
  return rank;
}

namespace {

void check_metric_args(std::span<const EvalRecord> records, std::size_t k) {
  if (k == 0) throw ValidationError("metric cutoff K must be at least 1");
  if (records.empty()) throw ValidationError("no evaluation records");
}

}  // namespace

double hits_at_k(std::span<const EvalRecord> records, std::size_t k) {
  check_metric_args(records, k);
  std::size_t hits = 0;
  for (const auto& r : records) {
    auto rank = relevant_rank(r);
    if (rank != 0 && rank <= k) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(records.size());
}

double mrr_at_k(std::span<const EvalRecord> records, std::size_t k) {
  check_metric_args(records, k);
  double total = 0.0;
  for (const auto& r : records) {
    auto rank = relevant_rank(r);
    if (rank != 0 && rank <= k) total += 1.0 / static_cast<double>(rank);
  }
  return total / static_cast<double>(records.size());
}

std::string AblationFlags::name() const {
  std::vector<std::string> off;
  if (!use_query_augmentation) off.emplace_back("no_query_augmentation");
  if (!use_identifier_augmentation) off.emplace_back("no_identifier_augmentation");
  if (!use_bilevel_pe) off.emplace_back("no_bilevel_pe");
  if (!use_retentive_attention) off.emplace_back("no_retentive_attention");
  if (off.empty()) return "full";
  std::string out = off[0];
  for (std::size_t i = 1; i < off.size(); ++i) out += "+" + off[i];
  return out;
}

std::vector<AblationFlags> standard_ablations() {
  std::vector<AblationFlags> out(5);
  out[1].use_query_augmentation = false;
  out[2].use_identifier_augmentation = false;
  out[3].use_bilevel_pe = false;
  out[4].use_retentive_attention = false;
  return out;
}

void apply_ablation(const AblationFlags& flags, ModelConfig& config) {
  config.bilevel_pe = flags.use_bilevel_pe;
  config.retentive = flags.use_retentive_attention;
}

namespace {

void check_alignment(const Corpus& corpus, const std::vector<IdentifierSet>& ids) {
  if (ids.size() != corpus.books.size())
    throw ValidationError("identifier file has " + std::to_string(ids.size()) +
                          " books, corpus has " + std::to_string(corpus.books.size()));
  for (std::size_t i = 0; i < ids.size(); ++i)
    if (ids[i].book_key != corpus.books[i].book_key)
      throw ValidationError("identifier set " + std::to_string(i) + " is for '" +
                            ids[i].book_key + "' but the corpus has '" +
                            corpus.books[i].book_key + "'");
}

}  // namespace

std::vector<TrainingPair> build_training_pairs(const Corpus& corpus,
                                               const std::vector<IdentifierSet>& ids,
                                               const AblationFlags& flags,
                                               const DataOptions& options,
                                               QueryGenerator& generator,
                                               std::vector<std::string>* warnings) {
  check_alignment(corpus, ids);
  IndexingOptions indexing = options.indexing;
  indexing.identifier_augmentation = flags.use_identifier_augmentation;
  std::vector<TrainingPair> pairs;
  for (std::size_t i = 0; i < corpus.books.size(); ++i) {
    auto idx = build_indexing_pairs(corpus.books[i], ids[i], indexing);
    pairs.insert(pairs.end(), idx.begin(), idx.end());
    if (flags.use_query_augmentation) {
      auto ret = build_retrieval_pairs(corpus.books[i], ids[i], options.queries_per_category,
                                       generator, options.queries, warnings);
      pairs.insert(pairs.end(), ret.begin(), ret.end());
    }
  }
  return pairs;
}

std::vector<LabeledQuery> build_query_set(const Corpus& corpus, std::size_t per_category,
                                          QueryGenerator& generator,
                                          const QueryOptions& options,
                                          std::vector<std::string>* warnings) {
  std::vector<LabeledQuery> out;
  for (const auto& book : corpus.books)
    for (auto category : {QueryCategory::kSingle, QueryCategory::kMulti})
      for (auto& q : generate_queries(book, category, per_category, generator, options, warnings))
        out.push_back({std::move(q), book.book_key, category});
  return out;
}

std::size_t remove_training_overlap(std::vector<LabeledQuery>& queries,
                                    const std::vector<TrainingPair>& pairs) {
  std::set<std::string_view> seen;
  for (const auto& p : pairs) seen.insert(p.input_text);
  auto before = queries.size();
  std::erase_if(queries, [&](const LabeledQuery& q) { return seen.contains(q.query); });
  return before - queries.size();
}

std::string_view mode_name(DecodeMode mode) {
  switch (mode) {
    case DecodeMode::kParallel: return "parallel";
    case DecodeMode::kSerial: return "serial";
    case DecodeMode::kBook: return "book";
  }
  return "?";
}

DecodeMode parse_mode(std::string_view name) {
  for (auto m : {DecodeMode::kParallel, DecodeMode::kSerial, DecodeMode::kBook})
    if (mode_name(m) == name) return m;
  throw ConfigError("unknown decoding mode '" + std::string(name) +
                    "' (expected parallel, serial or book)");
}

namespace {

std::map<std::string, PrefixTrie> per_book_tries(const std::vector<IdentifierSet>& ids,
                                                 const Tokenizer& tok) {
  std::map<std::string, PrefixTrie> out;
  for (const auto& s : ids) out.emplace(s.book_key, book_chapter_trie(s, tok));
  return out;
}

}  // namespace

ModelRanker::ModelRanker(const Model& model, const Tokenizer& tokenizer,
                         const std::vector<IdentifierSet>& ids, DecodeOptions options)
    : model_(model),
      tokenizer_(tokenizer),
      options_(options),
      book_trie_(book_level_trie(ids, tokenizer)),
      chapter_trie_(chapter_level_trie(ids, tokenizer)),
      per_book_(per_book_tries(ids, tokenizer)) {
  if (model.config().vocab_size != tokenizer.size())
    throw ValidationError("checkpoint vocabulary (" + std::to_string(model.config().vocab_size) +
                          ") does not match the tokenizer (" + std::to_string(tokenizer.size()) +
                          ")");
}

std::vector<ScoredBook> ModelRanker::rank(std::string_view query, DecodeMode mode) const {
  nn::NoGradGuard no_grad;
  auto input = segment_input(tokenizer_, query, model_.config().max_segment_len);
  if (input.segments.empty()) throw ValidationError("query has no words");
  DecoderSession session(model_, model_.encode(input));
  const BeamOptions book_beam{.beam_width = options_.book_beam};
  const BeamOptions chapter_beam{.beam_width = options_.chapter_beam};
  switch (mode) {
    case DecodeMode::kParallel:
      return aggregate_parallel(constrained_beam_search(session, book_trie_, book_beam),
                                constrained_beam_search(session, chapter_trie_, chapter_beam));
    case DecodeMode::kSerial: {
      SerialOptions opt;
      opt.book_beam = book_beam;
      opt.chapter_beam = chapter_beam;
      opt.beta = options_.beta;
      opt.gamma = options_.gamma;
      return aggregate_serial(session, book_trie_, per_book_, opt);
    }
    case DecodeMode::kBook:
      return combine_serial(constrained_beam_search(session, book_trie_, book_beam), {}, 1.0,
                            0.0);
  }
  throw ValidationError("unknown decoding mode");
}

ModeReport evaluate(const BookRanker& ranker, const std::vector<LabeledQuery>& queries,
                    DecodeMode mode, std::size_t threads) {
  if (queries.empty()) throw ValidationError("no evaluation queries");
  ModeReport report;
  report.mode = mode;
  report.results.resize(queries.size());

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < queries.size();) {
      try {
        auto& r = report.results[i];
        r.query = queries[i];
        r.ranked = ranker.rank(queries[i].query, mode);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next = queries.size();
      }
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, queries.size());
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<EvalRecord> records;
  records.reserve(queries.size());
  for (auto& r : report.results) {
    EvalRecord rec{r.query.query, r.query.book_key, {}};
    for (const auto& b : r.ranked) rec.ranked.push_back(b.book_key);
    r.rank = relevant_rank(rec);
    records.push_back(std::move(rec));
  }
  report.hits_at_1 = hits_at_k(records, 1);
  report.hits_at_10 = hits_at_k(records, 10);
  report.mrr_at_20 = mrr_at_k(records, 20);
  return report;
}

std::string render_report(const ExperimentReport& report, std::size_t top_n) {
  json out;
  out["ablation"] = {{"name", report.ablation.name()},
                     {"use_query_augmentation", report.ablation.use_query_augmentation},
                     {"use_identifier_augmentation", report.ablation.use_identifier_augmentation},
                     {"use_bilevel_pe", report.ablation.use_bilevel_pe},
                     {"use_retentive_attention", report.ablation.use_retentive_attention}};
  out["decode"] = {{"book_beam", report.decode.book_beam},
                   {"chapter_beam", report.decode.chapter_beam},
                   {"beta", report.decode.beta},
                   {"gamma", report.decode.gamma}};
  json modes = json::array();
  for (const auto& m : report.modes) {
    json mode;
    mode["mode"] = mode_name(m.mode);
    mode["queries"] = m.results.size();
    mode["metrics"] = {{"hits@1", m.hits_at_1}, {"hits@10", m.hits_at_10}, {"mrr@20", m.mrr_at_20}};
    json rows = json::array();
    for (const auto& r : m.results) {
      json top = json::array();
      for (std::size_t i = 0; i < std::min(top_n, r.ranked.size()); ++i) {
        const auto& b = r.ranked[i];
        top.push_back({{"book_key", b.book_key}, {"s_b", b.s_b}, {"s_c", b.s_c},
                       {"score", b.combined}});
      }
      rows.push_back({{"query", r.query.query},
                      {"category", category_name(r.query.category)},
                      {"relevant", r.query.book_key},
                      {"rank", r.rank},
                      {"top", std::move(top)}});
    }
    mode["per_query"] = std::move(rows);
    modes.push_back(std::move(mode));
  }
  out["modes"] = std::move(modes);
  return out.dump(2) + "\n";
}

namespace {

void require_artifact(const std::filesystem::path& path, std::string_view what) {
  if (path.empty()) throw ConfigError(std::string(what) + " path is not set");
  if (!std::filesystem::exists(path))
    throw MissingArtifactError(std::string(what) + " not found: " + path.string());
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& config) {
  require_artifact(config.identifiers, "identifier file");
  require_artifact(config.tokenizer, "tokenizer file");
  require_artifact(config.checkpoint, "checkpoint");
  require_artifact(config.queries, "query file");
  if (config.modes.empty()) throw ConfigError("no decoding modes requested");

  auto ids = load_identifiers(config.identifiers);
  auto tok = Tokenizer::load(config.tokenizer);
  auto model = Model::load(config.checkpoint);
  auto queries = load_queries(config.queries);

  ModelConfig expected = model.config();
  apply_ablation(config.ablation, expected);
  if (!(expected == model.config()))
    throw ConfigError("checkpoint wiring (bilevel_pe=" +
                      std::to_string(model.config().bilevel_pe) +
                      ", retentive=" + std::to_string(model.config().retentive) +
                      ") does not match ablation '" + config.ablation.name() + "'");

  ModelRanker ranker(model, tok, ids, config.decode);
  ExperimentReport report{config.ablation, config.decode, {}};
  for (auto mode : config.modes) report.modes.push_back(evaluate(ranker, queries, mode, config.threads));
  return report;
}

BenchmarkResult run_benchmark(const BenchmarkOptions& options,
                              const std::function<void(const TrainProgress&)>& on_epoch) {
  Corpus corpus = synth_corpus(options.corpus);
  auto ids = build_identifier_sets(corpus, options.identifier_params);
  ExtractiveGenerator generator;
  auto pairs = build_training_pairs(corpus, ids, options.ablation, options.data, generator);
  auto queries = build_query_set(corpus, options.data.queries_per_category, generator,
                                 options.data.queries);
  std::vector<LabeledQuery> whole;
  for (const auto& book : corpus.books)
    whole.push_back({whole_text(book, options.data.indexing.whole_text_chapter_cap),
                     book.book_key, QueryCategory::kSingle});

  auto tok = build_vocabulary(corpus, ids, pairs);

  ModelConfig config = options.model;
  config.vocab_size = tok.size();
  apply_ablation(options.ablation, config);
  Model model(config, options.model_seed);

  BenchmarkResult result;
  result.books = corpus.books.size();
  result.training_pairs = pairs.size();
  result.training = train_model(model, tok, pairs, options.train, on_epoch);

  ModelRanker ranker(model, tok, ids, options.decode);
  result.indexing = evaluate(ranker, whole, DecodeMode::kBook, options.threads);
  result.retrieval = {options.ablation, options.decode, {}};
  for (auto mode : {DecodeMode::kParallel, DecodeMode::kSerial})
    result.retrieval.modes.push_back(evaluate(ranker, queries, mode, options.threads));
  return result;
}

}  // namespace bookgr
