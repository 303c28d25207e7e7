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

#include <iostream>

#include "CLI11.hpp"
#include "bookgr/error.hpp"
#include "pipeline.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitMissing = 3;
constexpr int kExitRuntime = 4;

}  // namespace

int main(int argc, char** argv) {
  using namespace bookgr;

  CLI::App app{"Generative book search: build, train and query a book retrieval model."};
  app.require_subcommand(1);
  std::string config_file;
  std::vector<std::string> overrides;
  app.add_option("-c,--config", config_file, "JSON run configuration");
  app.add_option("--set", overrides, "Override a config value, e.g. --set train.lr=0.002")
      ->allow_extra_args(false);

  auto* synth = app.add_subcommand("corpus-synth", "Write a synthetic corpus");
  auto* ids = app.add_subcommand("ids-build", "Assign hierarchical identifiers");
  auto* augment = app.add_subcommand("augment", "Build training pairs and held-out queries");
  auto* train = app.add_subcommand("train", "Train the model");
  auto* eval = app.add_subcommand("eval", "Evaluate on the held-out queries");
  auto* search = app.add_subcommand("search", "Rank books for one query");
  auto* show = app.add_subcommand("config", "Print the effective configuration");
  std::string query;
  search->add_option("query", query, "Query text")->required();
  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    auto config = cli::load_run_config(config_file, overrides);
    if (synth->parsed()) cli::stage_corpus_synth(config, std::cerr);
    if (ids->parsed()) cli::stage_ids_build(config, std::cerr);
    if (augment->parsed()) cli::stage_augment(config, std::cerr);
    if (train->parsed()) cli::stage_train(config, std::cerr);
    if (eval->parsed()) cli::stage_eval(config, std::cerr);
    if (search->parsed()) cli::stage_search(config, query, std::cout);
    if (show->parsed()) std::cout << cli::to_json(config).dump(2) << "\n";
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const MissingArtifactError& e) {
    std::cerr << "missing artifact: " << e.what() << "\n";
    return kExitMissing;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
