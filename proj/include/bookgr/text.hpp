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

#include <string>
#include <string_view>
#include <vector>

namespace bookgr::text {

std::vector<std::string> split_whitespace(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

// True when `s` has no leading/trailing whitespace and no runs of more than
// one whitespace character. Such strings survive split/join unchanged.
bool is_space_normalized(std::string_view s);

// Lowercase ASCII with leading/trailing non-alphanumerics stripped.
std::string normalize_word(std::string_view word);

// Sentences end at '.', '!' or '?' followed by whitespace (or end of text).
std::vector<std::string> split_sentences(std::string_view s);

}  // namespace bookgr::text
