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
#ifndef CLIP2_CLUSTERING_H_
#define CLIP2_CLUSTERING_H_

#include <cstddef>
#include <optional>
#include <vector>

#include "clip2/geometry.h"

namespace clip2 {

struct ClusterLabeling {
  static constexpr int kNoise = -1;
  std::vector<int> labels;  // per point: kNoise or a cluster id in [0, cluster_count)
  int cluster_count = 0;

  std::vector<std::size_t> members(int cluster) const;
  std::size_t noise_count() const;
};

// DBSCAN with a closed eps-neighbourhood that counts the point itself.
//
// Clusters are numbered in scan order of their first core point; a border
// point reachable from several clusters joins the lowest-numbered one.
// Neighbour queries use a uniform grid with cell size eps.
ClusterLabeling dbscan(const PointCloud& cloud, double eps, int min_pts);

struct SelectionPolicy {
  // Clusters smaller than this are ignored. Not part of the reference
  // pipeline; set to 1 to disable.
  std::size_t min_cluster_size = 20;
  // When set, equal-size clusters are ranked by centroid distance to this axis.
  std::optional<Frustum> axis;
};

// Largest cluster; ties by smaller centroid-to-axis distance, then lower id.
std::optional<PointCloud> select_proxy_cluster(const PointCloud& cloud, const ClusterLabeling& labeling,
                                               const SelectionPolicy& policy);

}  // namespace clip2

#endif  // CLIP2_CLUSTERING_H_
