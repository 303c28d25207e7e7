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

#include "bookgr/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <set>

#include "bookgr/error.hpp"

namespace bookgr {
namespace {

double sq_dist(const Vector& a, const Vector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::size_t distinct_count(std::span<const Vector> points) {
  std::set<Vector> seen(points.begin(), points.end());
  return seen.size();
}

std::vector<Vector> plus_plus_seeds(std::span<const Vector> points, int k,
                                    std::mt19937_64& rng) {
  std::vector<Vector> centers;
  centers.push_back(points[std::uniform_int_distribution<std::size_t>(0, points.size() - 1)(rng)]);
  std::vector<double> d2(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) d2[i] = sq_dist(points[i], centers[0]);
  while (static_cast<int>(centers.size()) < k) {
    double total = 0.0;
    for (double d : d2) total += d;
    std::size_t pick = 0;
    if (total > 0.0) {
      double r = std::uniform_real_distribution<double>(0.0, total)(rng);
      double acc = 0.0;
      pick = points.size() - 1;
      for (std::size_t i = 0; i < points.size(); ++i) {
        acc += d2[i];
        if (d2[i] > 0.0 && r < acc) {
          pick = i;
          break;
        }
      }
      // Rounding can leave `pick` on a zero-distance point; take the farthest.
      if (d2[pick] == 0.0) pick = std::max_element(d2.begin(), d2.end()) - d2.begin();
    }
    centers.push_back(points[pick]);
    for (std::size_t i = 0; i < points.size(); ++i)
      d2[i] = std::min(d2[i], sq_dist(points[i], centers.back()));
  }
  return centers;
}

}  // namespace

namespace {

// Moves single points between clusters whenever that lowers the total
// within-cluster sum of squares (centroid shifts included). Returns whether
// any point moved; centroids and sizes are kept exact.
bool hartigan_pass(std::span<const Vector> points, KmeansResult& res,
                   std::vector<std::size_t>& sizes) {
  const std::size_t dim = points[0].size();
  const int k = static_cast<int>(res.centroids.size());
  bool moved = false;
  for (std::size_t i = 0; i < points.size(); ++i) {
    int a = res.assignment[i];
    if (sizes[a] <= 1) continue;
    double na = static_cast<double>(sizes[a]);
    double remove_gain = na / (na - 1.0) * sq_dist(points[i], res.centroids[a]);
    int best = -1;
    double best_delta = -1e-12 * std::max(remove_gain, 1.0);
    for (int b = 0; b < k; ++b) {
      if (b == a) continue;
      double nb = static_cast<double>(sizes[b]);
      double delta = nb / (nb + 1.0) * sq_dist(points[i], res.centroids[b]) - remove_gain;
      if (delta < best_delta) {
        best_delta = delta;
        best = b;
      }
    }
    if (best < 0) continue;
    double nb = static_cast<double>(sizes[best]);
    for (std::size_t j = 0; j < dim; ++j) {
      res.centroids[a][j] = (res.centroids[a][j] * na - points[i][j]) / (na - 1.0);
      res.centroids[best][j] = (res.centroids[best][j] * nb + points[i][j]) / (nb + 1.0);
    }
    --sizes[a];
    ++sizes[best];
    res.assignment[i] = best;
    moved = true;
  }
  return moved;
}

KmeansResult lloyd(std::span<const Vector> points, int k, std::mt19937_64& rng,
                   const KmeansOptions& options) {
  const std::size_t n = points.size();
  const std::size_t dim = points[0].size();
  KmeansResult res;
  res.centroids = plus_plus_seeds(points, k, rng);
  res.assignment.assign(n, -1);
  double prev_inertia = std::numeric_limits<double>::infinity();

  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    res.iterations = iter;
    // Assignment step; a point only moves on a strict improvement.
    for (std::size_t i = 0; i < n; ++i) {
      int current = res.assignment[i];
      double best = current >= 0 ? sq_dist(points[i], res.centroids[current])
                                 : std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        double d = sq_dist(points[i], res.centroids[c]);
        if (d < best) {
          best = d;
          res.assignment[i] = c;
        }
      }
    }
    // Repair empty clusters by stealing the farthest point of the largest.
    std::vector<std::size_t> sizes(k, 0);
    for (int a : res.assignment) ++sizes[a];
    for (int c = 0; c < k; ++c) {
      if (sizes[c] != 0) continue;
      int largest = static_cast<int>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
      std::size_t far = n;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (res.assignment[i] != largest) continue;
        double d = sq_dist(points[i], res.centroids[largest]);
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      res.assignment[far] = c;
      --sizes[largest];
      sizes[c] = 1;
    }
    // Update step.
    std::vector<Vector> sums(k, Vector(dim, 0.0));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < dim; ++j) sums[res.assignment[i]][j] += points[i][j];
    for (int c = 0; c < k; ++c)
      for (std::size_t j = 0; j < dim; ++j)
        res.centroids[c][j] = sums[c][j] / static_cast<double>(sizes[c]);
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      inertia += sq_dist(points[i], res.centroids[res.assignment[i]]);
    res.inertia = inertia;
    if (std::abs(prev_inertia - inertia) <= options.tolerance * inertia) {
      // Lloyd fixed point; a Hartigan pass escapes equidistant ties.
      if (!hartigan_pass(points, res, sizes)) break;
      inertia = std::numeric_limits<double>::infinity();
    }
    prev_inertia = inertia;
  }
  return res;
}

}  // namespace

KmeansResult kmeans(std::span<const Vector> points, int k, std::uint64_t seed,
                    const KmeansOptions& options) {
  if (points.empty()) throw ValidationError("kmeans: no points");
  if (k < 1) throw ValidationError("kmeans: k must be positive");
  k = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(k), distinct_count(points)));

  std::mt19937_64 rng(seed);
  KmeansResult res;
  for (int r = 0; r < std::max(options.restarts, 1); ++r) {
    KmeansResult run = lloyd(points, k, rng, options);
    if (r == 0 || run.inertia < res.inertia - 1e-12 * std::max(res.inertia, 1.0))
      res = std::move(run);
  }

  // Canonical relabeling by first occurrence.
  std::vector<int> relabel(k, -1);
  int next = 0;
  for (int a : res.assignment)
    if (relabel[a] < 0) relabel[a] = next++;
  std::vector<Vector> centroids(k);
  for (int c = 0; c < k; ++c) centroids[relabel[c]] = std::move(res.centroids[c]);
  res.centroids = std::move(centroids);
  for (int& a : res.assignment) a = relabel[a];
  return res;
}

std::string SemanticNumber::render(int k) const {
  int width = static_cast<int>(std::to_string(std::max(k - 1, 0)).size());
  std::string out;
  for (int d : digits) {
    std::string s = std::to_string(d);
    out += std::string(static_cast<std::size_t>(std::max(0, width - static_cast<int>(s.size()))), '0') + s;
  }
  return out;
}

ClusterTree hierarchical_kmeans_tree(std::span<const Vector> items, int k,
                                     std::size_t leaf_threshold, std::uint64_t seed) {
  if (items.empty()) throw ValidationError("hierarchical_kmeans: no items");
  if (k < 2) throw ValidationError("hierarchical_kmeans: k must be at least 2");
  if (leaf_threshold < 1) throw ValidationError("hierarchical_kmeans: leaf_threshold must be positive");

  ClusterTree tree;
  tree.numbers.resize(items.size());
  ClusterNode root;
  for (std::size_t i = 0; i < items.size(); ++i) root.members.push_back(i);
  tree.nodes.push_back(std::move(root));

  // Each pending entry clusters one node; the root is always clustered once
  // so every number has at least one digit.
  std::vector<std::size_t> pending{0};
  while (!pending.empty()) {
    std::size_t id = pending.front();
    pending.erase(pending.begin());
    std::vector<Vector> pts;
    for (std::size_t m : tree.nodes[id].members) pts.push_back(items[m]);
    auto km = kmeans(pts, k, mix(seed ^ mix(id)));
    std::size_t n_clusters = km.centroids.size();
    std::vector<std::size_t> child_ids;
    for (std::size_t c = 0; c < n_clusters; ++c) {
      ClusterNode child;
      child.depth = tree.nodes[id].depth + 1;
      child_ids.push_back(tree.nodes.size());
      tree.nodes.push_back(std::move(child));
    }
    const auto members = tree.nodes[id].members;
    for (std::size_t i = 0; i < members.size(); ++i) {
      int c = km.assignment[i];
      tree.nodes[child_ids[c]].members.push_back(members[i]);
      tree.numbers[members[i]].digits.push_back(c);
    }
    tree.nodes[id].children = child_ids;
    for (std::size_t cid : child_ids) {
      auto& child = tree.nodes[cid];
      if (child.members.size() <= leaf_threshold) continue;
      std::vector<Vector> cpts;
      for (std::size_t m : child.members) cpts.push_back(items[m]);
      if (distinct_count(cpts) >= 2) {
        pending.push_back(cid);
        continue;
      }
      child.unsplittable = true;
      std::size_t size = child.members.size(), width = 0;
      for (std::size_t cap = 1; cap < size; cap *= static_cast<std::size_t>(k)) ++width;
      for (std::size_t i = 0; i < size; ++i) {
        std::vector<int> extra(width);
        std::size_t v = i;
        for (std::size_t w = width; w-- > 0;) {
          extra[w] = static_cast<int>(v % static_cast<std::size_t>(k));
          v /= static_cast<std::size_t>(k);
        }
        auto& digits = tree.numbers[child.members[i]].digits;
        digits.insert(digits.end(), extra.begin(), extra.end());
      }
    }
  }
  return tree;
}

std::vector<SemanticNumber> hierarchical_kmeans(std::span<const Vector> items, int k,
                                                std::size_t leaf_threshold,
                                                std::uint64_t seed) {
  return hierarchical_kmeans_tree(items, k, leaf_threshold, seed).numbers;
}

}  // namespace bookgr
