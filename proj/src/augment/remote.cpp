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

#include <cctype>
#include <thread>

#include "bookgr/augment.hpp"
#include "bookgr/error.hpp"
#include "httplib.h"
#include "json.hpp"

namespace bookgr {
namespace {

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  for (auto pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size()))
    s.replace(pos, from.size(), to);
}

std::string fill(std::string tmpl, std::size_t count, std::string_view content) {
  replace_all(tmpl, "{X}", std::to_string(count));
  replace_all(tmpl, "{chapter texts}", content);
  return tmpl;
}

// Releases a semaphore slot on scope exit.
class SlotGuard {
 public:
  explicit SlotGuard(std::counting_semaphore<>& s) : s_(s) { s_.acquire(); }
  ~SlotGuard() { s_.release(); }
  SlotGuard(const SlotGuard&) = delete;
  SlotGuard& operator=(const SlotGuard&) = delete;

 private:
  std::counting_semaphore<>& s_;
};

}  // namespace

std::string single_chapter_prompt(std::size_t count, std::string_view content) {
  return fill(
      "Given the following chapter from a book, generate {X} pseudo queries that can be "
      "answered using the information contained within this single chapter. The queries "
      "should focus on key themes, events, characters, and any specific details provided in "
      "the chapter. A single chapter content: {chapter texts}.",
      count, content);
}

std::string multi_chapter_prompt(std::size_t count, std::string_view content) {
  return fill(
      "Given the following chapters from a book, where they are separated by a token \"#\", "
      "generate {X} complex pseudo queries that require synthesizing information from "
      "multiple chapters to answer. Each query should be clear, specific, and necessitate "
      "the integration of information across different chapters. Multiple chapter contents: "
      "{chapter texts}.",
      count, content);
}

std::vector<std::string> parse_numbered_list(std::string_view body) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= body.size()) {
    auto end = body.find('\n', start);
    if (end == std::string_view::npos) end = body.size();
    std::string_view line = body.substr(start, end - start);
    start = end + 1;
    std::size_t i = 0;
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t digits = i;
    while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
    if (i == digits || i >= line.size() || (line[i] != '.' && line[i] != ')')) continue;
    ++i;
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t last = line.size();
    while (last > i && std::isspace(static_cast<unsigned char>(line[last - 1]))) --last;
    if (last > i) out.emplace_back(line.substr(i, last - i));
  }
  return out;
}

RemoteLlmGenerator::RemoteLlmGenerator(RemoteLlmConfig config) : config_(std::move(config)) {
  constexpr std::string_view scheme = "http://";
  if (!config_.endpoint.starts_with(scheme))
    throw ConfigError("llm endpoint must start with http://: '" + config_.endpoint + "'");
  auto slash = config_.endpoint.find('/', scheme.size());
  host_ = config_.endpoint.substr(0, slash);
  path_ = slash == std::string::npos ? "/" : config_.endpoint.substr(slash);
  if (host_.size() == scheme.size()) throw ConfigError("llm endpoint has no host");
  if (config_.max_parallel < 1) throw ConfigError("llm max_parallel must be at least 1");
  if (config_.retries < 0) throw ConfigError("llm retries must be non-negative");
  slots_ = std::make_unique<std::counting_semaphore<>>(
      static_cast<std::ptrdiff_t>(config_.max_parallel));
}

RemoteLlmGenerator::~RemoteLlmGenerator() = default;

std::vector<std::string> RemoteLlmGenerator::attempt(const std::string& prompt,
                                                     std::size_t count) {
  httplib::Client client(host_);
  client.set_connection_timeout(config_.timeout);
  client.set_read_timeout(config_.timeout);
  client.set_write_timeout(config_.timeout);
  httplib::Headers headers;
  if (!config_.token.empty()) headers.emplace("Authorization", "Bearer " + config_.token);
  nlohmann::json body{{"model", config_.model}, {"content", prompt}};
  auto res = client.Post(path_, headers, body.dump(), "application/json");
  if (!res) throw IoError("llm request failed: " + httplib::to_string(res.error()));
  if (res->status != 200)
    throw IoError("llm endpoint returned HTTP " + std::to_string(res->status));
  std::string content;
  try {
    content = nlohmann::json::parse(res->body).at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("llm response is not {\"content\": text}: ") + e.what());
  }
  auto items = parse_numbered_list(content);
  if (items.size() < count)
    throw IoError("llm response listed " + std::to_string(items.size()) + " queries, expected " +
                  std::to_string(count));
  items.resize(count);
  return items;
}

std::vector<std::string> RemoteLlmGenerator::generate(const QueryRequest& req) {
  const std::string prompt = req.category == QueryCategory::kSingle
                                 ? single_chapter_prompt(req.count, req.content)
                                 : multi_chapter_prompt(req.count, req.content);
  SlotGuard slot(*slots_);
  auto delay = config_.backoff;
  for (int i = 0;; ++i) {
    try {
      return attempt(prompt, req.count);
    } catch (const IoError& e) {
      if (i >= config_.retries)
        throw IoError(std::string(e.what()) + " (after " + std::to_string(i + 1) + " attempts)");
    }
    std::this_thread::sleep_for(delay);
    delay *= 2;
  }
}

}  // namespace bookgr
