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

#include "pipeline.hpp"

#include <fstream>
#include <iomanip>
#include <memory>

#include "bookgr/error.hpp"
#include "bookgr/text.hpp"

namespace bookgr::cli {

namespace {

std::filesystem::path output_path(const RunConfig& c, const std::filesystem::path& p) {
  auto out = c.paths.resolve(p);
  if (out.has_parent_path()) std::filesystem::create_directories(out.parent_path());
  return out;
}

std::unique_ptr<QueryGenerator> make_generator(const RunConfig& c, std::uint64_t seed) {
  if (c.augment.generator == "remote") {
    RemoteLlmConfig llm = c.augment.llm;
    if (llm.token.empty()) {
      if (const char* env = std::getenv("BOOKGR_LLM_TOKEN")) llm.token = env;
    }
    return std::make_unique<RemoteLlmGenerator>(llm);
  }
  ExtractiveGenerator::Options opt;
  opt.seed = seed;
  return std::make_unique<ExtractiveGenerator>(opt);
}

DataOptions data_options(const RunConfig& c, std::uint64_t seed) {
  DataOptions d;
  d.queries_per_category = c.augment.queries_per_category;
  d.indexing = c.augment.indexing;
  d.queries.multi_chapters = c.augment.multi_chapters;
  d.queries.seed = seed;
  return d;
}

void print_warnings(const std::vector<std::string>& warnings, std::ostream& log) {
  for (const auto& w : warnings) log << "warning: " << w << "\n";
}

}  // namespace

void stage_corpus_synth(const RunConfig& c, std::ostream& log) {
  auto corpus = synth_corpus(c.corpus);
  auto path = output_path(c, c.paths.corpus);
  save_corpus(corpus, path);
  log << "wrote " << corpus.books.size() << " books to " << path.string() << "\n";
}

void stage_ids_build(const RunConfig& c, std::ostream& log) {
  auto corpus = load_corpus(c.paths.resolve(c.paths.corpus));
  auto ids = build_identifier_sets(corpus, c.identifiers);
  auto path = output_path(c, c.paths.identifiers);
  save_identifiers(ids, path);
  log << "wrote identifiers for " << ids.size() << " books to " << path.string() << "\n";
}

void stage_augment(const RunConfig& c, std::ostream& log) {
  auto corpus = load_corpus(c.paths.resolve(c.paths.corpus));
  auto ids = load_identifiers(c.paths.resolve(c.paths.identifiers));
  std::vector<std::string> warnings;

  auto train_gen = make_generator(c, c.augment.seed);
  auto pairs = build_training_pairs(corpus, ids, c.ablation, data_options(c, c.augment.seed),
                                    *train_gen, &warnings);
  auto pairs_path = output_path(c, c.paths.pairs);
  save_pairs(pairs, pairs_path);
  log << "wrote " << pairs.size() << " training pairs to " << pairs_path.string() << "\n";

  auto eval_gen = make_generator(c, c.augment.eval_seed);
  auto eval_opt = data_options(c, c.augment.eval_seed);
  auto queries = build_query_set(corpus, c.augment.queries_per_category, *eval_gen,
                                 eval_opt.queries, &warnings);
  if (auto dropped = remove_training_overlap(queries, pairs))
    log << "dropped " << dropped << " held-out queries that repeat a training input\n";
  if (queries.empty()) throw ValidationError("every held-out query repeats a training input");
  auto query_path = output_path(c, c.paths.queries);
  save_queries(queries, query_path);
  log << "wrote " << queries.size() << " held-out queries to " << query_path.string() << "\n";
  print_warnings(warnings, log);
}

void stage_train(const RunConfig& c, std::ostream& log) {
  auto corpus = load_corpus(c.paths.resolve(c.paths.corpus));
  auto ids = load_identifiers(c.paths.resolve(c.paths.identifiers));
  auto pairs = load_pairs(c.paths.resolve(c.paths.pairs));
  auto tok = build_vocabulary(corpus, ids, pairs);

  ModelConfig mc = c.model;
  mc.vocab_size = tok.size();
  apply_ablation(c.ablation, mc);
  Model model(mc, c.model_seed);
  log << pairs.size() << " pairs, vocabulary " << tok.size() << "\n";
  auto report = train_model(model, tok, pairs, c.train, [&](const TrainProgress& p) {
    log << "epoch " << p.epoch << "/" << c.train.epochs << " loss " << std::fixed
        << std::setprecision(4) << p.epoch_loss << " (" << std::setprecision(1) << p.seconds
        << " s)\n"
        << std::defaultfloat << std::flush;
  });

  auto tok_path = output_path(c, c.paths.tokenizer);
  auto ckpt_path = output_path(c, c.paths.checkpoint);
  tok.save(tok_path);
  model.save(ckpt_path);
  log << "trained " << report.steps << " steps; wrote " << ckpt_path.string() << "\n";
}

void stage_eval(const RunConfig& c, std::ostream& log) {
  ExperimentConfig e;
  e.identifiers = c.paths.resolve(c.paths.identifiers);
  e.tokenizer = c.paths.resolve(c.paths.tokenizer);
  e.checkpoint = c.paths.resolve(c.paths.checkpoint);
  e.queries = c.paths.resolve(c.paths.queries);
  e.modes = c.eval_modes;
  e.decode = c.decode;
  e.ablation = c.ablation;
  e.threads = c.threads;
  auto report = run_experiment(e);

  auto path = output_path(c, c.paths.report);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << render_report(report);
  if (!out) throw IoError("write failed for " + path.string());
  for (const auto& m : report.modes)
    log << mode_name(m.mode) << ": hits@10 " << m.hits_at_10 << " mrr@20 " << m.mrr_at_20
        << " over " << m.results.size() << " queries\n";
  log << "wrote " << path.string() << "\n";
}

void stage_search(const RunConfig& c, std::string_view query, std::ostream& out) {
  if (text::split_whitespace(query).empty()) throw ConfigError("search needs a non-empty query");
  auto ids = load_identifiers(c.paths.resolve(c.paths.identifiers));
  auto tok = Tokenizer::load(c.paths.resolve(c.paths.tokenizer));
  auto model = Model::load(c.paths.resolve(c.paths.checkpoint));
  ModelRanker ranker(model, tok, ids, c.decode);
  auto ranked = ranker.rank(query, c.search_mode);

  std::map<std::string, std::string> book_ids;
  for (const auto& s : ids) book_ids[s.book_key] = s.book_id;
  out << "rank\tbook_key\tscore\ts_b\ts_c\tbook_id\n";
  for (std::size_t i = 0; i < std::min(c.search_top, ranked.size()); ++i) {
    const auto& b = ranked[i];
    out << i + 1 << '\t' << b.book_key << '\t' << b.combined << '\t' << b.s_b << '\t' << b.s_c
        << '\t' << book_ids[b.book_key] << '\n';
  }
}

}  // namespace bookgr::cli
