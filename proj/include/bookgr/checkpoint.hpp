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
#include <vector>

#include "bookgr/tensor.hpp"

namespace bookgr::nn {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

// Binary layout (little endian):
//   magic "BKGRCKPT", u32 version, u64 count,
//   count x { u32 name_len, name bytes, u64 rows, u64 cols, f64[rows*cols] }
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path,
                     const std::vector<NamedTensor>& tensors);

// Reads every tensor in file order.
std::vector<NamedTensor> read_checkpoint(const std::filesystem::path& path);

// Copies stored values into `targets`; names and shapes must match exactly
// (same set, any order).
void load_checkpoint(const std::filesystem::path& path,
                     std::vector<NamedTensor>& targets);

}  // namespace bookgr::nn
