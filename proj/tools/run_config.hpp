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

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "bookgr/augment.hpp"
#include "bookgr/corpus.hpp"
#include "bookgr/evalkit.hpp"
#include "bookgr/identifiers.hpp"
#include "bookgr/model.hpp"
#include "bookgr/train.hpp"
#include "json.hpp"

namespace bookgr::cli {

// Artifact locations. Relative paths resolve against workdir.
struct RunPaths {
  std::filesystem::path workdir = ".";
  std::filesystem::path corpus = "corpus.jsonl";
  std::filesystem::path identifiers = "identifiers.jsonl";
  std::filesystem::path pairs = "pairs.jsonl";
  std::filesystem::path queries = "queries.jsonl";
  std::filesystem::path tokenizer = "vocab.tsv";
  std::filesystem::path checkpoint = "model.ckpt";
  std::filesystem::path report = "report.json";

  std::filesystem::path resolve(const std::filesystem::path& p) const;
};

struct AugmentConfig {
  std::size_t queries_per_category = 5;
  IndexingOptions indexing;
  std::size_t multi_chapters = 3;
  std::uint64_t seed = 0;
  // Seed for the held-out evaluation queries; must differ from `seed`.
  std::uint64_t eval_seed = 1;
  std::string generator = "extractive";  // or "remote"
  RemoteLlmConfig llm;
};

struct RunConfig {
  RunPaths paths;
  SynthOptions corpus;
  IdentifierParams identifiers;
  AugmentConfig augment;
  AblationFlags ablation;
  ModelConfig model;  // vocab_size is set by the train stage
  std::uint64_t model_seed = 1;
  TrainOptions train;
  std::string precision = "float64";
  DecodeOptions decode;
  std::vector<DecodeMode> eval_modes{DecodeMode::kParallel, DecodeMode::kSerial};
  DecodeMode search_mode = DecodeMode::kParallel;
  std::size_t search_top = 10;
  std::size_t threads = 0;
};

// Strict: unknown keys and wrong value types raise ConfigError naming the
// key path, e.g. "train.lr: expected a number".
RunConfig parse_run_config(const nlohmann::json& doc);
nlohmann::ordered_json to_json(const RunConfig& config);

// Applies "a.b.c=value" to `doc`. The value is read as JSON when it parses,
// as a plain string otherwise.
void apply_override(nlohmann::json& doc, std::string_view assignment);

// Reads the file (when given), applies the overrides in order and parses.
RunConfig load_run_config(const std::filesystem::path& file,
                          const std::vector<std::string>& overrides);

}  // namespace bookgr::cli
