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

#include "bookgr/checkpoint.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <map>

#include "bookgr/error.hpp"

namespace bookgr::nn {
namespace {

constexpr char kMagic[8] = {'B', 'K', 'G', 'R', 'C', 'K', 'P', 'T'};

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::filesystem::path& path) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T)))
    throw IoError("truncated checkpoint " + path.string());
  return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path,
                     const std::vector<NamedTensor>& tensors) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, tensors.size());
  for (const auto& [name, t] : tensors) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint64_t>(out, t.rows());
    put<std::uint64_t>(out, t.cols());
    out.write(reinterpret_cast<const char*>(t.data().data()),
              static_cast<std::streamsize>(t.size() * sizeof(double)));
  }
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<NamedTensor> read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifactError("checkpoint not found: " + path.string());
  char magic[8];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw IoError("not a checkpoint file: " + path.string());
  auto version = get<std::uint32_t>(in, path);
  if (version != kCheckpointVersion)
    throw IoError("unsupported checkpoint version " + std::to_string(version));
  auto count = get<std::uint64_t>(in, path);
  std::vector<NamedTensor> result;
  for (std::uint64_t i = 0; i < count; ++i) {
    auto len = get<std::uint32_t>(in, path);
    std::string name(len, '\0');
    if (!in.read(name.data(), len)) throw IoError("truncated checkpoint " + path.string());
    auto rows = get<std::uint64_t>(in, path);
    auto cols = get<std::uint64_t>(in, path);
    std::vector<double> data(rows * cols);
    if (!in.read(reinterpret_cast<char*>(data.data()),
                 static_cast<std::streamsize>(data.size() * sizeof(double))))
      throw IoError("truncated checkpoint " + path.string());
    result.push_back({std::move(name), Tensor::from(rows, cols, std::move(data))});
  }
  return result;
}

void load_checkpoint(const std::filesystem::path& path,
                     std::vector<NamedTensor>& targets) {
  auto stored = read_checkpoint(path);
  std::map<std::string, Tensor> by_name;
  for (auto& [name, t] : stored) by_name.emplace(name, t);
  if (by_name.size() != targets.size())
    throw ValidationError("checkpoint has " + std::to_string(by_name.size()) +
                          " tensors, model expects " + std::to_string(targets.size()));
  for (auto& [name, t] : targets) {
    auto it = by_name.find(name);
    if (it == by_name.end())
      throw ValidationError("checkpoint missing tensor '" + name + "'");
    if (it->second.shape() != t.shape())
      throw ValidationError("tensor '" + name + "' has shape " +
                            it->second.shape().str() + ", expected " + t.shape().str());
    std::ranges::copy(it->second.data(), t.mutable_data().begin());
  }
}

}  // namespace bookgr::nn
