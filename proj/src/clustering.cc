/**
 * Copyright 2026 The clip2 Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "clip2/clustering.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <unordered_map>

#include "clip2/errors.h"

namespace clip2 {
namespace {

// Beyond this many cells per axis the grid keys could overflow; fall back to
// brute-force neighbour scans.
constexpr double kMaxCellsPerAxis = 1e6;

struct CellKey {
  std::int64_t x, y, z;
  bool operator==(const CellKey&) const = default;
};

struct CellHash {
  std::size_t operator()(const CellKey& k) const {
    std::uint64_t h = 1469598103934665603ull;
    for (std::int64_t v : {k.x, k.y, k.z}) {
      h ^= static_cast<std::uint64_t>(v);
      h *= 1099511628211ull;
    }
    return static_cast<std::size_t>(h);
  }
};

class NeighborIndex {
 public:
  NeighborIndex(const PointCloud& cloud, double eps) : cloud_(cloud), eps2_(eps * eps), eps_(eps) {
    if (cloud.empty()) return;
    const Aabb box = aabb(cloud);
    const double span = (box.max - box.min).maxCoeff();
    origin_ = box.min;
    use_grid_ = span / eps < kMaxCellsPerAxis;
    if (!use_grid_) return;
    for (std::size_t i = 0; i < cloud.size(); ++i) cells_[key(cloud.points[i])].push_back(i);
  }

  // Indices within eps of point i (including i), ascending.
  void query(std::size_t i, std::vector<std::size_t>& out) const {
    out.clear();
    const Point3& p = cloud_.points[i];
    if (!use_grid_) {
      for (std::size_t j = 0; j < cloud_.size(); ++j) {
        if ((cloud_.points[j] - p).squaredNorm() <= eps2_) out.push_back(j);
      }
      return;
    }
    const CellKey c = key(p);
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        for (std::int64_t dz = -1; dz <= 1; ++dz) {
          auto it = cells_.find({c.x + dx, c.y + dy, c.z + dz});
          if (it == cells_.end()) continue;
          for (std::size_t j : it->second) {
            if ((cloud_.points[j] - p).squaredNorm() <= eps2_) out.push_back(j);
          }
        }
      }
    }
    std::sort(out.begin(), out.end());
  }

 private:
  CellKey key(const Point3& p) const {
    const Eigen::Vector3d rel = (p - origin_) / eps_;
    return {static_cast<std::int64_t>(std::floor(rel.x())), static_cast<std::int64_t>(std::floor(rel.y())),
            static_cast<std::int64_t>(std::floor(rel.z()))};
  }

  const PointCloud& cloud_;
  double eps2_;
  double eps_;
  Point3 origin_ = Point3::Zero();
  bool use_grid_ = false;
  std::unordered_map<CellKey, std::vector<std::size_t>, CellHash> cells_;
};

}  // namespace

std::vector<std::size_t> ClusterLabeling::members(int cluster) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == cluster) out.push_back(i);
  }
  return out;
}

std::size_t ClusterLabeling::noise_count() const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), kNoise));
}

ClusterLabeling dbscan(const PointCloud& cloud, double eps, int min_pts) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw InvalidArgument("dbscan: eps must be positive and finite");
  if (min_pts < 1) throw InvalidArgument("dbscan: min_pts must be >= 1");
  for (const auto& p : cloud.points) {
    if (!p.allFinite()) throw InvalidArgument("dbscan: non-finite point");
  }

  constexpr int kUnvisited = -2;
  ClusterLabeling result;
  result.labels.assign(cloud.size(), kUnvisited);
  const NeighborIndex index(cloud, eps);
  const auto threshold = static_cast<std::size_t>(min_pts);

  std::vector<std::size_t> neighbors;
  std::vector<std::size_t> expansion;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (result.labels[i] != kUnvisited) continue;
    index.query(i, neighbors);
    if (neighbors.size() < threshold) {
      // Provisional; a later cluster may still claim it as a border point.
      result.labels[i] = ClusterLabeling::kNoise;
      continue;
    }
    const int id = result.cluster_count++;
    result.labels[i] = id;
    std::deque<std::size_t> frontier(neighbors.begin(), neighbors.end());
    while (!frontier.empty()) {
      const std::size_t j = frontier.front();
      frontier.pop_front();
      if (result.labels[j] == ClusterLabeling::kNoise) result.labels[j] = id;
      if (result.labels[j] != kUnvisited) continue;
      result.labels[j] = id;
      index.query(j, expansion);
      if (expansion.size() >= threshold) frontier.insert(frontier.end(), expansion.begin(), expansion.end());
    }
  }
  return result;
}

std::optional<PointCloud> select_proxy_cluster(const PointCloud& cloud, const ClusterLabeling& labeling,
                                               const SelectionPolicy& policy) {
  if (labeling.labels.size() != cloud.size()) throw InvalidArgument("select_proxy_cluster: labeling/cloud size mismatch");
  std::vector<std::size_t> sizes(static_cast<std::size_t>(labeling.cluster_count), 0);
  for (int l : labeling.labels) {
    if (l >= 0) ++sizes.at(static_cast<std::size_t>(l));
  }
  int best = -1;
  double best_distance = std::numeric_limits<double>::infinity();
  for (int c = 0; c < labeling.cluster_count; ++c) {
    const std::size_t size = sizes[static_cast<std::size_t>(c)];
    if (size == 0 || size < policy.min_cluster_size) continue;
    double distance = 0.0;
    if (policy.axis) distance = policy.axis->distance_to_axis(centroid(subset(cloud, labeling.members(c))));
    if (best < 0) {
      best = c;
      best_distance = distance;
      continue;
    }
    const std::size_t best_size = sizes[static_cast<std::size_t>(best)];
    if (size > best_size || (size == best_size && distance < best_distance)) {
      best = c;
      best_distance = distance;
    }
  }
  if (best < 0) return std::nullopt;
  return subset(cloud, labeling.members(best));
}

}  // namespace clip2
