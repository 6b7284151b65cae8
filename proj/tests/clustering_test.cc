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

#include <random>

#include <doctest.h>

#include "clip2/clustering.h"
#include "clip2/errors.h"
#include "oracles.h"

namespace clip2 {
namespace {

PointCloud line_group(Point3 start, int count, double spacing) {
  PointCloud c;
  for (int i = 0; i < count; ++i) c.points.push_back(start + Point3(spacing * i, 0, 0));
  return c;
}

PointCloud concat(const PointCloud& a, const PointCloud& b) {
  PointCloud out = a;
  out.points.insert(out.points.end(), b.points.begin(), b.points.end());
  return out;
}

SelectionPolicy any_size() {
  SelectionPolicy p;
  p.min_cluster_size = 1;
  return p;
}

TEST_CASE("two separated groups form two clusters") {
  const PointCloud cloud = concat(line_group(Point3(0, 0, 0), 5, 0.1), line_group(Point3(10, 0, 0), 5, 0.1));
  const ClusterLabeling l = dbscan(cloud, 0.5, 3);
  CHECK(l.cluster_count == 2);
  CHECK(l.noise_count() == 0);
  CHECK(l.members(0).size() == 5);
  CHECK(l.labels[0] == 0);
  CHECK(l.labels[9] == 1);
}

TEST_CASE("tiny eps with min_pts 1 isolates every point") {
  const PointCloud cloud = line_group(Point3(0, 0, 0), 6, 0.01);
  const ClusterLabeling l = dbscan(cloud, 1e-9, 1);
  CHECK(l.cluster_count == 6);
  for (int i = 0; i < 6; ++i) CHECK(l.labels[i] == i);
}

TEST_CASE("an isolated point is noise") {
  PointCloud cloud = line_group(Point3(0, 0, 0), 8, 0.05);
  cloud.points.emplace_back(4, 4, 4);
  const ClusterLabeling l = dbscan(cloud, 0.2, 4);
  CHECK(l.cluster_count == 1);
  CHECK(l.labels.back() == ClusterLabeling::kNoise);
  CHECK(l.noise_count() == 1);
}

TEST_CASE("parameter validation") {
  const PointCloud cloud = line_group(Point3(0, 0, 0), 3, 1.0);
  CHECK_THROWS_AS(dbscan(cloud, 0.0, 2), InvalidArgument);
  CHECK_THROWS_AS(dbscan(cloud, -1.0, 2), InvalidArgument);
  CHECK_THROWS_AS(dbscan(cloud, 1.0, 0), InvalidArgument);
  CHECK(dbscan(PointCloud{}, 1.0, 2).cluster_count == 0);
}

TEST_CASE("border point shared by two clusters joins the lower id") {
  // Two dense triples 2 apart with a border point midway, reachable from both.
  PointCloud cloud;
  cloud.points = {Point3(0, 0, 0), Point3(-0.1, 0, 0), Point3(-0.2, 0, 0), Point3(1, 0, 0),
                  Point3(2, 0, 0), Point3(2.1, 0, 0), Point3(2.2, 0, 0)};
  const ClusterLabeling l = dbscan(cloud, 1.0, 4);
  CHECK(l.cluster_count == 2);
  CHECK(l.labels[3] == 0);
  CHECK(l.labels == oracle::dbscan(cloud.points, 1.0, 4));
}

TEST_CASE("labels match the density-connectivity oracle on random clouds") {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> size(0, 50), minpts(1, 6);
  std::uniform_real_distribution<double> coord(0.0, 3.0), eps(0.1, 0.9);
  for (int trial = 0; trial < 100; ++trial) {
    PointCloud cloud;
    const int n = size(rng);
    for (int i = 0; i < n; ++i) cloud.points.emplace_back(coord(rng), coord(rng), coord(rng) * 0.3);
    const double e = eps(rng);
    const int m = minpts(rng);
    const ClusterLabeling l = dbscan(cloud, e, m);
    REQUIRE(l.labels == oracle::dbscan(cloud.points, e, m));
  }
}

TEST_CASE("grid and brute-force paths agree on widely spread clouds") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> coord(-1e6, 1e6);
  PointCloud cloud;
  for (int i = 0; i < 40; ++i) cloud.points.emplace_back(coord(rng), 0, 0);
  for (int i = 0; i < 10; ++i) cloud.points.emplace_back(0.01 * i, 0, 0);
  CHECK(dbscan(cloud, 0.05, 2).labels == oracle::dbscan(cloud.points, 0.05, 2));
}

TEST_CASE("proxy selection picks the largest cluster") {
  const PointCloud cloud = concat(line_group(Point3(0, 0, 0), 3, 0.1), line_group(Point3(5, 0, 0), 7, 0.1));
  const ClusterLabeling l = dbscan(cloud, 0.3, 2);
  REQUIRE(l.cluster_count == 2);
  const auto chosen = select_proxy_cluster(cloud, l, any_size());
  REQUIRE(chosen.has_value());
  CHECK(chosen->size() == 7);
  CHECK(chosen->points[0] == Point3(5, 0, 0));
}

TEST_CASE("proxy selection returns nothing when everything is noise or too small") {
  const PointCloud cloud = line_group(Point3(0, 0, 0), 4, 5.0);
  const ClusterLabeling l = dbscan(cloud, 0.5, 2);
  CHECK(l.cluster_count == 0);
  CHECK_FALSE(select_proxy_cluster(cloud, l, any_size()).has_value());

  const PointCloud small = line_group(Point3(0, 0, 0), 5, 0.1);
  SelectionPolicy strict;
  strict.min_cluster_size = 6;
  CHECK_FALSE(select_proxy_cluster(small, dbscan(small, 0.5, 2), strict).has_value());
}

TEST_CASE("equal-size clusters tie-break by distance to the frustum axis, then id") {
  // Cluster 0 sits 3 m off the optical axis, cluster 1 only 1 m off.
  const PointCloud cloud = concat(line_group(Point3(-3, 0, 10), 4, 0.1), line_group(Point3(1, 0, 10), 4, 0.1));
  const ClusterLabeling l = dbscan(cloud, 0.3, 2);
  REQUIRE(l.cluster_count == 2);

  SelectionPolicy policy = any_size();
  policy.axis = build_frustum(Box2D{-1, -1, 1, 1}, CameraCalibration{}, 0.1, 50.0);
  const auto chosen = select_proxy_cluster(cloud, l, policy);
  REQUIRE(chosen.has_value());
  CHECK(chosen->points[0] == Point3(1, 0, 10));

  const auto no_axis = select_proxy_cluster(cloud, l, any_size());
  REQUIRE(no_axis.has_value());
  CHECK(no_axis->points[0] == Point3(-3, 0, 10));
}

}  // namespace
}  // namespace clip2
