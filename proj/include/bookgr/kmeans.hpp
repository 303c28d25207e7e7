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

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace bookgr {

using Vector = std::vector<double>;

struct KmeansOptions {
  int max_iterations = 100;
  double tolerance = 1e-6;  // relative inertia change
  int restarts = 8;         // independent k-means++ seedings; best inertia wins
};

struct KmeansResult {
  // Labels are canonical: cluster 0 holds the lowest input index, cluster 1
  // the lowest index not in cluster 0, and so on.
  std::vector<int> assignment;
  std::vector<Vector> centroids;
  double inertia = 0.0;
  int iterations = 0;
};

// Lloyd's algorithm with k-means++ seeding. `k` is clamped to the number of
// distinct points; every returned cluster is non-empty.
KmeansResult kmeans(std::span<const Vector> points, int k, std::uint64_t seed,
                    const KmeansOptions& options = {});

// Digit path from the root of the clustering tree to an item's leaf.
struct SemanticNumber {
  std::vector<int> digits;

  // Fixed-width concatenation; width = decimal digits of (k - 1).
  std::string render(int k) const;
  bool operator==(const SemanticNumber&) const = default;
};

struct ClusterNode {
  std::vector<std::size_t> members;
  std::vector<std::size_t> children;  // indices into the node list
  int depth = 0;
  // Group exceeded the leaf threshold but all of its vectors are identical.
  bool unsplittable = false;
};

struct ClusterTree {
  std::vector<SemanticNumber> numbers;  // aligned with the input items
  std::vector<ClusterNode> nodes;       // nodes[0] is the root
};

// Recursive k-means: every group larger than `leaf_threshold` is clustered
// again and its members gain another digit. Groups that cannot be split get
// their within-group index appended as base-k digits.
ClusterTree hierarchical_kmeans_tree(std::span<const Vector> items, int k,
                                     std::size_t leaf_threshold, std::uint64_t seed);

std::vector<SemanticNumber> hierarchical_kmeans(std::span<const Vector> items, int k,
                                                std::size_t leaf_threshold,
                                                std::uint64_t seed);

}  // namespace bookgr
