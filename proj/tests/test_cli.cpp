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

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "bookgr/error.hpp"
#include "run_config.hpp"

using namespace bookgr;
using namespace bookgr::cli;
using json = nlohmann::json;

namespace {

std::string config_error(const json& doc) {
  try {
    parse_run_config(doc);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

// Runs the CLI binary and returns its exit status.
int run_cli(const std::string& args) {
  std::string cmd = std::string(BOOKGR_CLI) + " " + args + " >/dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("run config defaults") {
  auto c = parse_run_config(json::object());
  CHECK(c.identifiers.k == 10);
  CHECK(c.identifiers.leaf_threshold == 100);
  CHECK(c.train.label_smoothing == 0.1);
  CHECK(c.train.weight_decay == 0.01);
  CHECK(c.train.warmup_fraction == 0.1);
  CHECK(c.decode.beta == 1.0);
  CHECK(c.decode.gamma == 0.5);
  CHECK(c.decode.book_beam == 20);
  CHECK(c.decode.chapter_beam == 20);
  CHECK(c.augment.queries_per_category == 5);
  CHECK(c.augment.indexing.whole_text_chapter_cap == 100);
  CHECK(c.eval_modes == std::vector<DecodeMode>{DecodeMode::kParallel, DecodeMode::kSerial});
}

TEST_CASE("run config round trip") {
  json doc = {{"paths", {{"workdir", "/tmp/x"}, {"report", "out/r.json"}}},
              {"train", {{"lr", 0.002}, {"epochs", 7}}},
              {"augment", {{"llm", {{"endpoint", "http://h:1/v"}, {"timeout_ms", 500}}}}},
              {"ablation", {{"use_bilevel_pe", false}}},
              {"decode", {{"eval_modes", {"serial"}}, {"search_mode", "book"}}}};
  auto once = parse_run_config(doc);
  auto text = to_json(once).dump();
  auto twice = parse_run_config(json::parse(text));
  CHECK(to_json(twice).dump() == text);
  CHECK(twice.train.lr == 0.002);
  CHECK(twice.augment.llm.timeout.count() == 500);
  CHECK_FALSE(twice.ablation.use_bilevel_pe);
  CHECK(twice.search_mode == DecodeMode::kBook);
  CHECK(twice.paths.resolve(twice.paths.report) == std::filesystem::path("/tmp/x/out/r.json"));
}

TEST_CASE("run config errors name the key path") {
  CHECK(config_error({{"train", {{"lrr", 1}}}}) == "train.lrr: unknown key");
  CHECK(config_error({{"bogus", 1}}) == "bogus: unknown key");
  CHECK(config_error({{"train", {{"lr", "fast"}}}}) == "train.lr: expected a number");
  CHECK(config_error({{"train", {{"epochs", -3}}}}) == "train.epochs: expected a non-negative integer");
  CHECK(config_error({{"augment", {{"llm", {{"timeout_ms", "1s"}}}}}}).starts_with(
      "augment.llm.timeout_ms:"));
  CHECK(config_error({{"decode", {{"eval_modes", {"beam"}}}}}).starts_with("decode.eval_modes:"));
  CHECK(config_error({{"model", 3}}) == "model: expected an object");
  CHECK(config_error({{"augment", {{"eval_seed", 0}}}}).starts_with("augment.eval_seed:"));
  CHECK(config_error({{"train", {{"precision", "float32"}}}}).starts_with("train.precision:"));
  CHECK(config_error({{"model", {{"heads", 3}}}}).starts_with("model:"));
}

TEST_CASE("overrides") {
  json doc = {{"train", {{"lr", 0.1}}}};
  apply_override(doc, "train.lr=0.5");
  apply_override(doc, "paths.workdir=runs/a");
  apply_override(doc, "decode.eval_modes=[\"serial\"]");
  auto c = parse_run_config(doc);
  CHECK(c.train.lr == 0.5);
  CHECK(c.paths.workdir == "runs/a");
  CHECK(c.eval_modes == std::vector<DecodeMode>{DecodeMode::kSerial});
  CHECK_THROWS_AS(apply_override(doc, "novalue"), ConfigError);
  CHECK_THROWS_AS(apply_override(doc, "train.lr.x=1"), ConfigError);
  CHECK_THROWS_AS(apply_override(doc, "a..b=1"), ConfigError);
}

TEST_CASE("end-to-end pipeline through the binary") {
  auto dir = std::filesystem::temp_directory_path() / "bookgr_cli_smoke";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  json cfg = {{"paths", {{"workdir", dir.string()}}},
              {"corpus", {{"seed", 7}, {"books", 10}}},
              {"model", {{"d_model", 32}, {"d_ff", 64}}},
              {"train", {{"epochs", 2}}},
              {"decode", {{"book_beam", 5}, {"chapter_beam", 5}}}};
  std::ofstream(dir / "run.json") << cfg.dump(2);
  const std::string c = "--config " + (dir / "run.json").string();

  CHECK(run_cli("eval " + c) == 3);
  for (const char* stage : {"corpus-synth", "ids-build", "augment", "train", "eval"})
    REQUIRE_MESSAGE(run_cli(std::string(stage) + " " + c) == 0, stage);
  for (const char* artifact : {"corpus.jsonl", "identifiers.jsonl", "pairs.jsonl",
                               "queries.jsonl", "vocab.tsv", "model.ckpt", "report.json"})
    CHECK_MESSAGE(std::filesystem::file_size(dir / artifact) > 0, artifact);

  auto first = slurp(dir / "report.json");
  CHECK(run_cli("eval " + c + " --set paths.report=second.json") == 0);
  CHECK(slurp(dir / "second.json") == first);
  auto report = json::parse(first);
  CHECK(report["modes"].size() == 2);

  CHECK(run_cli("search \"\" " + c) == 2);
  CHECK(run_cli("search \"   \" " + c) == 2);
  CHECK(run_cli("search \"chapter words\" " + c) == 0);
  CHECK(run_cli("search") == 2);
  CHECK(run_cli("eval " + c + " --set train.nope=1") == 2);
  CHECK(run_cli("eval --config " + (dir / "absent.json").string()) == 2);

  std::ofstream(dir / "pairs.jsonl") << "{not json}\n";
  CHECK(run_cli("train " + c) == 4);
}
