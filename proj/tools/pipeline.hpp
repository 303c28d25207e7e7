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

#include <ostream>
#include <string_view>

#include "run_config.hpp"

namespace bookgr::cli {

// Each stage reads its inputs from the configured paths and writes its
// artifact; progress goes to `log`.
void stage_corpus_synth(const RunConfig& config, std::ostream& log);
void stage_ids_build(const RunConfig& config, std::ostream& log);
// Writes the training pairs and the held-out query file.
void stage_augment(const RunConfig& config, std::ostream& log);
// Writes the tokenizer and the checkpoint.
void stage_train(const RunConfig& config, std::ostream& log);
void stage_eval(const RunConfig& config, std::ostream& log);
// Prints the ranked books for one query to `out`. An empty query raises
// ConfigError.
void stage_search(const RunConfig& config, std::string_view query, std::ostream& out);

}  // namespace bookgr::cli
