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

#include "run_config.hpp"

#include <fstream>
#include <chrono>
#include <set>

#include "bookgr/error.hpp"

namespace bookgr::cli {

using json = nlohmann::json;

std::filesystem::path RunPaths::resolve(const std::filesystem::path& p) const {
  return p.is_absolute() ? p : workdir / p;
}

namespace {

// Reads one object, remembering which keys were consumed so leftovers can
// be reported.
class Reader {
 public:
  Reader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(where() + "expected an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    const json* v = take(key);
    if (v == nullptr) return;
    const std::string at = path_.empty() ? key : path_ + "." + key;
    if constexpr (std::is_same_v<T, bool>) {
      if (!v->is_boolean()) throw ConfigError(at + ": expected true or false");
      out = v->get<bool>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v->is_number_integer() || (!v->is_number_unsigned() && v->get<std::int64_t>() < 0))
        throw ConfigError(at + ": expected a non-negative integer");
      out = v->get<T>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v->is_number()) throw ConfigError(at + ": expected a number");
      out = v->get<T>();
    } else if constexpr (std::is_same_v<T, std::filesystem::path>) {
      if (!v->is_string()) throw ConfigError(at + ": expected a path string");
      out = v->get<std::string>();
    } else {
      if (!v->is_string()) throw ConfigError(at + ": expected a string");
      out = v->get<std::string>();
    }
  }

  void get_ms(const char* key, std::chrono::milliseconds& out) {
    std::int64_t ms = out.count();
    get(key, ms);
    out = std::chrono::milliseconds(ms);
  }

  void get_mode(const char* key, DecodeMode& out) {
    std::string name(mode_name(out));
    get(key, name);
    out = parse_mode_at(name, key);
  }

  void get_modes(const char* key, std::vector<DecodeMode>& out) {
    const json* v = take(key);
    if (v == nullptr) return;
    if (!v->is_array() || v->empty())
      throw ConfigError(path_ + "." + key + ": expected a non-empty list of modes");
    out.clear();
    for (const auto& m : *v) {
      if (!m.is_string()) throw ConfigError(path_ + "." + key + ": modes must be strings");
      out.push_back(parse_mode_at(m.get<std::string>(), key));
    }
  }

  // Runs `fn` on the sub-object when present.
  template <class Fn>
  void section(const char* key, Fn&& fn) {
    const json* v = take(key);
    if (v == nullptr) return;
    Reader sub(*v, path_.empty() ? key : path_ + "." + key);
    fn(sub);
    sub.finish();
  }

  void finish() const {
    for (auto it = node_.begin(); it != node_.end(); ++it)
      if (!seen_.contains(it.key()))
        throw ConfigError((path_.empty() ? it.key() : path_ + "." + it.key()) + ": unknown key");
  }

 private:
  const json* take(const char* key) {
    seen_.insert(key);
    auto it = node_.find(key);
    return it == node_.end() ? nullptr : &*it;
  }
  std::string where() const { return path_.empty() ? "config: " : path_ + ": "; }
  DecodeMode parse_mode_at(const std::string& name, const char* key) const {
    try {
      return parse_mode(name);
    } catch (const ConfigError& e) {
      throw ConfigError(path_ + "." + key + ": " + e.what());
    }
  }

  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

}  // namespace

RunConfig parse_run_config(const json& doc) {
  RunConfig c;
  Reader root(doc, "");
  root.section("paths", [&](Reader& r) {
    r.get("workdir", c.paths.workdir);
    r.get("corpus", c.paths.corpus);
    r.get("identifiers", c.paths.identifiers);
    r.get("pairs", c.paths.pairs);
    r.get("queries", c.paths.queries);
    r.get("tokenizer", c.paths.tokenizer);
    r.get("checkpoint", c.paths.checkpoint);
    r.get("report", c.paths.report);
  });
  root.section("corpus", [&](Reader& r) {
    r.get("seed", c.corpus.seed);
    r.get("books", c.corpus.n_books);
    r.get("chapters_min", c.corpus.chapters_per_book.min);
    r.get("chapters_max", c.corpus.chapters_per_book.max);
    r.get("sections_min", c.corpus.sections_per_chapter.min);
    r.get("sections_max", c.corpus.sections_per_chapter.max);
    r.get("words_min", c.corpus.words_per_section.min);
    r.get("words_max", c.corpus.words_per_section.max);
  });
  root.section("identifiers", [&](Reader& r) {
    int k = c.identifiers.k;
    r.get("k", k);
    c.identifiers.k = k;
    r.get("leaf_threshold", c.identifiers.leaf_threshold);
    r.get("seed", c.identifiers.seed);
    r.get("embed_dim", c.identifiers.embed_dim);
  });
  root.section("augment", [&](Reader& r) {
    r.get("queries_per_category", c.augment.queries_per_category);
    r.get("whole_text_chapter_cap", c.augment.indexing.whole_text_chapter_cap);
    r.get("keyword_count", c.augment.indexing.keyword_count);
    r.get("keyword_window", c.augment.indexing.keyword_window);
    r.get("summary_sentences", c.augment.indexing.summary_sentences);
    r.get("multi_chapters", c.augment.multi_chapters);
    r.get("seed", c.augment.seed);
    r.get("eval_seed", c.augment.eval_seed);
    r.get("generator", c.augment.generator);
    r.section("llm", [&](Reader& l) {
      l.get("endpoint", c.augment.llm.endpoint);
      l.get("token", c.augment.llm.token);
      l.get("model", c.augment.llm.model);
      l.get_ms("timeout_ms", c.augment.llm.timeout);
      l.get("max_parallel", c.augment.llm.max_parallel);
      l.get("retries", c.augment.llm.retries);
      l.get_ms("backoff_ms", c.augment.llm.backoff);
    });
  });
  root.section("ablation", [&](Reader& r) {
    r.get("use_query_augmentation", c.ablation.use_query_augmentation);
    r.get("use_identifier_augmentation", c.ablation.use_identifier_augmentation);
    r.get("use_bilevel_pe", c.ablation.use_bilevel_pe);
    r.get("use_retentive_attention", c.ablation.use_retentive_attention);
  });
  root.section("model", [&](Reader& r) {
    r.get("layers", c.model.layers);
    r.get("heads", c.model.heads);
    r.get("d_model", c.model.d_model);
    r.get("d_ff", c.model.d_ff);
    r.get("max_segment_len", c.model.max_segment_len);
    r.get("max_decode_len", c.model.max_decode_len);
    r.get("gate_init", c.model.gate_init);
    r.get("dropout", c.model.dropout);
    r.get("seed", c.model_seed);
  });
  root.section("train", [&](Reader& r) {
    r.get("epochs", c.train.epochs);
    r.get("batch_size", c.train.batch_size);
    r.get("lr", c.train.lr);
    r.get("warmup_fraction", c.train.warmup_fraction);
    r.get("weight_decay", c.train.weight_decay);
    r.get("label_smoothing", c.train.label_smoothing);
    r.get("clip_norm", c.train.clip_norm);
    r.get("seed", c.train.seed);
    r.get("precision", c.precision);
  });
  root.section("decode", [&](Reader& r) {
    r.get("book_beam", c.decode.book_beam);
    r.get("chapter_beam", c.decode.chapter_beam);
    r.get("beta", c.decode.beta);
    r.get("gamma", c.decode.gamma);
    r.get_modes("eval_modes", c.eval_modes);
    r.get_mode("search_mode", c.search_mode);
    r.get("search_top", c.search_top);
    r.get("threads", c.threads);
  });
  root.finish();

  if (c.precision != "float64")
    throw ConfigError("train.precision: only \"float64\" is supported");
  if (c.augment.generator != "extractive" && c.augment.generator != "remote")
    throw ConfigError("augment.generator: expected \"extractive\" or \"remote\"");
  if (c.augment.seed == c.augment.eval_seed)
    throw ConfigError("augment.eval_seed: must differ from augment.seed");
  if (c.identifiers.k < 2) throw ConfigError("identifiers.k: must be at least 2");
  if (c.train.epochs == 0) throw ConfigError("train.epochs: must be at least 1");
  if (c.train.batch_size == 0) throw ConfigError("train.batch_size: must be at least 1");
  if (c.decode.book_beam == 0) throw ConfigError("decode.book_beam: must be at least 1");
  if (c.decode.chapter_beam == 0) throw ConfigError("decode.chapter_beam: must be at least 1");
  try {
    ModelConfig probe = c.model;
    probe.vocab_size = Tokenizer::kSpecialCount + 1;
    probe.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
  return c;
}

nlohmann::ordered_json to_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["paths"] = {{"workdir", c.paths.workdir.string()},
                {"corpus", c.paths.corpus.string()},
                {"identifiers", c.paths.identifiers.string()},
                {"pairs", c.paths.pairs.string()},
                {"queries", c.paths.queries.string()},
                {"tokenizer", c.paths.tokenizer.string()},
                {"checkpoint", c.paths.checkpoint.string()},
                {"report", c.paths.report.string()}};
  j["corpus"] = {{"seed", c.corpus.seed},
                 {"books", c.corpus.n_books},
                 {"chapters_min", c.corpus.chapters_per_book.min},
                 {"chapters_max", c.corpus.chapters_per_book.max},
                 {"sections_min", c.corpus.sections_per_chapter.min},
                 {"sections_max", c.corpus.sections_per_chapter.max},
                 {"words_min", c.corpus.words_per_section.min},
                 {"words_max", c.corpus.words_per_section.max}};
  j["identifiers"] = {{"k", c.identifiers.k},
                      {"leaf_threshold", c.identifiers.leaf_threshold},
                      {"seed", c.identifiers.seed},
                      {"embed_dim", c.identifiers.embed_dim}};
  j["augment"] = {{"queries_per_category", c.augment.queries_per_category},
                  {"whole_text_chapter_cap", c.augment.indexing.whole_text_chapter_cap},
                  {"keyword_count", c.augment.indexing.keyword_count},
                  {"keyword_window", c.augment.indexing.keyword_window},
                  {"summary_sentences", c.augment.indexing.summary_sentences},
                  {"multi_chapters", c.augment.multi_chapters},
                  {"seed", c.augment.seed},
                  {"eval_seed", c.augment.eval_seed},
                  {"generator", c.augment.generator},
                  {"llm",
                   {{"endpoint", c.augment.llm.endpoint},
                    {"token", c.augment.llm.token},
                    {"model", c.augment.llm.model},
                    {"timeout_ms", c.augment.llm.timeout.count()},
                    {"max_parallel", c.augment.llm.max_parallel},
                    {"retries", c.augment.llm.retries},
                    {"backoff_ms", c.augment.llm.backoff.count()}}}};
  j["ablation"] = {{"use_query_augmentation", c.ablation.use_query_augmentation},
                   {"use_identifier_augmentation", c.ablation.use_identifier_augmentation},
                   {"use_bilevel_pe", c.ablation.use_bilevel_pe},
                   {"use_retentive_attention", c.ablation.use_retentive_attention}};
  j["model"] = {{"layers", c.model.layers},
                {"heads", c.model.heads},
                {"d_model", c.model.d_model},
                {"d_ff", c.model.d_ff},
                {"max_segment_len", c.model.max_segment_len},
                {"max_decode_len", c.model.max_decode_len},
                {"gate_init", c.model.gate_init},
                {"dropout", c.model.dropout},
                {"seed", c.model_seed}};
  j["train"] = {{"epochs", c.train.epochs},
                {"batch_size", c.train.batch_size},
                {"lr", c.train.lr},
                {"warmup_fraction", c.train.warmup_fraction},
                {"weight_decay", c.train.weight_decay},
                {"label_smoothing", c.train.label_smoothing},
                {"clip_norm", c.train.clip_norm},
                {"seed", c.train.seed},
                {"precision", c.precision}};
  nlohmann::ordered_json modes = nlohmann::ordered_json::array();
  for (auto m : c.eval_modes) modes.push_back(mode_name(m));
  j["decode"] = {{"book_beam", c.decode.book_beam},
                 {"chapter_beam", c.decode.chapter_beam},
                 {"beta", c.decode.beta},
                 {"gamma", c.decode.gamma},
                 {"eval_modes", modes},
                 {"search_mode", mode_name(c.search_mode)},
                 {"search_top", c.search_top},
                 {"threads", c.threads}};
  return j;
}

void apply_override(json& doc, std::string_view assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0)
    throw ConfigError("override '" + std::string(assignment) + "' is not key.path=value");
  std::string key(assignment.substr(0, eq));
  std::string raw(assignment.substr(eq + 1));
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;

  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    auto dot = key.find('.', start);
    std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("override key '" + key + "' has an empty component");
    if (!node->is_object()) throw ConfigError("override key '" + key + "' descends into a value");
    if (dot == std::string::npos) {
      (*node)[part] = std::move(value);
      return;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

RunConfig load_run_config(const std::filesystem::path& file,
                          const std::vector<std::string>& overrides) {
  json doc = json::object();
  if (!file.empty()) {
    std::ifstream in(file);
    if (!in) throw ConfigError("config file not found: " + file.string());
    try {
      doc = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError("config file " + file.string() + ": " + e.what());
    }
  }
  for (const auto& o : overrides) apply_override(doc, o);
  return parse_run_config(doc);
}

}  // namespace bookgr::cli
