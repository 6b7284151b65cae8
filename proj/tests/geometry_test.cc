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

#include <cmath>
#include <random>

#include <doctest.h>

#include "clip2/errors.h"
#include "clip2/geometry.h"
#include "clip2/geometry_io.h"
#include "oracles.h"
#include "test_support.h"

namespace clip2 {
namespace {

using testing::pinhole;

CameraCalibration random_calibration(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> f(150.0, 600.0);
  std::uniform_real_distribution<double> c(100.0, 400.0);
  CameraCalibration calib;
  calib.intrinsics = pinhole(f(rng), c(rng), c(rng));
  calib.intrinsics(0, 0) *= 1.1;
  calib.camera_extrinsics = oracle::random_rigid(rng);
  calib.lidar_extrinsics = oracle::random_rigid(rng);
  return calib;
}

TEST_CASE("backprojection of a single pixel with identity calibration") {
  DepthImage depth(1, 1, 1.0);
  const PointCloud pts = backproject_depth(depth, CameraCalibration{}, Box2D{0, 0, 1, 1});
  REQUIRE(pts.size() == 1);
  CHECK(pts.points[0].isApprox(Point3(0, 0, 1)));
}

TEST_CASE("backprojection inverts the pinhole model") {
  CameraCalibration calib;
  calib.intrinsics = pinhole(2.0, 1.0, 1.0);
  DepthImage depth(4, 2, 0.0);
  depth.at(3, 1) = 4.0;
  const PointCloud pts = backproject_depth(depth, calib, Box2D{0, 0, 4, 2});
  REQUIRE(pts.size() == 1);
  CHECK((pts.points[0] - Point3(4, 0, 4)).norm() < 1e-12);

  const Projection proj = project_points(pts, calib);
  REQUIRE(proj.pixels.size() == 1);
  CHECK(proj.pixels[0].u == doctest::Approx(3.0));
  CHECK(proj.pixels[0].v == doctest::Approx(1.0));
  CHECK(proj.pixels[0].d == doctest::Approx(4.0));
}

TEST_CASE("invalid depth and out-of-band pixels are dropped") {
  DepthImage depth(5, 5, 0.0);
  CHECK(backproject_depth(depth, CameraCalibration{}, Box2D{0, 0, 4, 4}).empty());

  depth.at(0, 0) = std::nan("");
  depth.at(1, 1) = 2.0;
  depth.at(2, 2) = 2.2;
  depth.at(3, 3) = 2.1;
  depth.at(4, 4) = 9.0;  // background
  const PointCloud pts = backproject_depth(depth, CameraCalibration{}, Box2D{0, 0, 4, 4});
  CHECK(pts.size() == 3);
}

TEST_CASE("backprojection rejects singular intrinsics and out-of-image regions") {
  CameraCalibration bad;
  bad.intrinsics(0, 0) = 0.0;
  DepthImage depth(3, 3, 1.0);
  CHECK_THROWS_AS(backproject_depth(depth, bad, Box2D{0, 0, 2, 2}), InvalidArgument);
  CHECK_THROWS_AS(backproject_depth(depth, CameraCalibration{}, Box2D{0, 0, 7, 2}), InvalidArgument);
}

TEST_CASE("projection flags points behind the camera") {
  PointCloud cloud;
  cloud.points = {Point3(0, 0, 1), Point3(0, 0, -1), Point3(0.5, 0.5, 0.0)};
  const Projection proj = project_points(cloud, CameraCalibration{});
  REQUIRE(proj.pixels.size() == 1);
  CHECK(proj.pixels[0].u == 0.0);
  CHECK(proj.pixels[0].v == 0.0);
  CHECK(proj.pixels[0].d == 1.0);
  CHECK(proj.behind == std::vector<std::size_t>{1, 2});
}

TEST_CASE("project then unproject round trips under random rigid calibrations") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> coord(-5.0, 5.0);
  double worst = 0.0;
  for (int c = 0; c < 5; ++c) {
    const CameraCalibration calib = random_calibration(rng);
    PointCloud cloud;
    for (int i = 0; i < 500; ++i) cloud.points.emplace_back(coord(rng), coord(rng), coord(rng));
    const Projection proj = project_points(cloud, calib);
    CHECK(proj.pixels.size() + proj.behind.size() == cloud.size());
    for (const PixelDepth& px : proj.pixels) {
      worst = std::max(worst, (unproject(px.u, px.v, px.d, calib) - cloud.points[px.index]).norm());
    }
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("projection preserves depth ordering along a ray") {
  std::mt19937_64 rng(3);
  const CameraCalibration calib = random_calibration(rng);
  PointCloud cloud;
  for (double d : {0.5, 1.0, 2.0, 7.5}) cloud.points.push_back(unproject(120.0, 80.0, d, calib));
  const Projection proj = project_points(cloud, calib);
  REQUIRE(proj.pixels.size() == 4);
  for (std::size_t i = 1; i < 4; ++i) CHECK(proj.pixels[i].d > proj.pixels[i - 1].d);
}

TEST_CASE("frustum with a full-image box keeps every in-range point in front") {
  CameraCalibration calib;
  calib.intrinsics = pinhole(100.0, 50.0, 50.0);
  const Frustum fr = build_frustum(Box2D{0, 0, 100, 100}, calib, 0.1, 100.0);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> z(0.2, 99.0), t(-0.5, 0.5);
  for (int i = 0; i < 200; ++i) {
    const double d = z(rng);
    CHECK(fr.contains(Point3(t(rng) * d, t(rng) * d, d)));
  }
  CHECK_FALSE(fr.contains(Point3(0, 0, 0.05)));
  CHECK_FALSE(fr.contains(Point3(0, 0, 150)));
  CHECK_FALSE(fr.contains(Point3(0, 0, -3)));
}

TEST_CASE("frustum box boundary is closed") {
  CameraCalibration calib;
  calib.intrinsics = pinhole(2.0, 0.0, 0.0);
  // Box corner (1, 1) at depth 5 corresponds to x = y = 2.5.
  const Frustum fr = build_frustum(Box2D{-1, -1, 1, 1}, calib, 0.5, 10.0);
  CHECK(fr.contains(Point3(2.5, 2.5, 5.0)));
  CHECK(fr.contains(Point3(-2.5, -2.5, 5.0)));
  CHECK_FALSE(fr.contains(Point3(2.5 + 1e-9, 2.5, 5.0)));
}

TEST_CASE("frustum rejects an inverted range") {
  CHECK_THROWS_AS(build_frustum(Box2D{0, 0, 1, 1}, CameraCalibration{}, 5.0, 5.0), InvalidArgument);
  CHECK_THROWS_AS(build_frustum(Box2D{0, 0, 1, 1}, CameraCalibration{}, 9.0, 1.0), InvalidArgument);
}

TEST_CASE("frustum membership equals the projection oracle") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> coord(-12.0, 12.0);
  std::uniform_real_distribution<double> pix(-50.0, 700.0);
  std::size_t inside = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const CameraCalibration calib = random_calibration(rng);
    const double a = pix(rng), b = pix(rng), c = pix(rng), d = pix(rng);
    const Box2D box{std::min(a, b), std::min(c, d), std::max(a, b), std::max(c, d)};
    const Frustum fr = build_frustum(box, calib, 0.5, 15.0);
    PointCloud cloud;
    for (int i = 0; i < 1000; ++i) cloud.points.emplace_back(coord(rng), coord(rng), coord(rng));
    std::vector<std::size_t> expected;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      const bool want = oracle::in_frustum(calib.intrinsics, calib.camera_extrinsics, calib.lidar_extrinsics,
                                           box.u_min, box.v_min, box.u_max, box.v_max, 0.5, 15.0, cloud.points[i]);
      CHECK(fr.contains(cloud.points[i]) == want);
      if (want) expected.push_back(i);
    }
    const PointCloud kept = points_in_frustum(cloud, fr);
    REQUIRE(kept.size() == expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) CHECK(kept.points[i] == cloud.points[expected[i]]);
    inside += expected.size();
  }
  CHECK(inside > 0);
}

TEST_CASE("axis-aligned bounds") {
  PointCloud one;
  one.points = {Point3(1, -2, 3)};
  CHECK(aabb(one).min == one.points[0]);
  CHECK(aabb(one).max == one.points[0]);

  PointCloud two;
  two.points = {Point3(0, 0, 0), Point3(1, 2, 3)};
  CHECK(aabb(two).min == Point3(0, 0, 0));
  CHECK(aabb(two).max == Point3(1, 2, 3));
  CHECK(aabb(two).center().isApprox(Point3(0.5, 1, 1.5)));

  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(0.0, 3.0);
  PointCloud cloud;
  for (int i = 0; i < 300; ++i) cloud.points.emplace_back(g(rng), g(rng), g(rng));
  const Aabb box = aabb(cloud);
  for (const Point3& p : cloud.points) CHECK(box.contains(p));

  const Point3 shift(3, -1, 0.25);
  PointCloud moved = cloud;
  for (Point3& p : moved.points) p += shift;
  CHECK((aabb(moved).min - (box.min + shift)).norm() < 1e-12);
  CHECK((aabb(moved).max - (box.max + shift)).norm() < 1e-12);

  CHECK_THROWS_AS(aabb(PointCloud{}), InvalidArgument);
}

TEST_CASE("point cloud and calibration files round trip") {
  testing::TempDir dir("geomio");
  PointCloud cloud;
  cloud.points = {Point3(1.5, -2.25, 3), Point3(0, 0, 0)};
  cloud.intensity = {0.5f, 1.0f};
  write_point_cloud(cloud, dir / "a.pcf");
  const PointCloud back = read_point_cloud(dir / "a.pcf");
  REQUIRE(back.size() == 2);
  CHECK(back.points[0] == cloud.points[0]);
  CHECK(back.intensity == cloud.intensity);

  std::string bytes = encode_point_cloud(cloud);
  bytes.pop_back();
  CHECK_THROWS_AS(decode_point_cloud(bytes), FormatError);

  std::mt19937_64 rng(4);
  const CameraCalibration calib = random_calibration(rng);
  write_calibration(calib, dir / "c.calib");
  const CameraCalibration parsed = read_calibration(dir / "c.calib");
  CHECK(parsed.intrinsics == calib.intrinsics);
  CHECK(parsed.camera_extrinsics == calib.camera_extrinsics);
  CHECK(parsed.lidar_extrinsics == calib.lidar_extrinsics);

  CHECK_THROWS_AS(read_calibration(dir / "missing.calib"), IoError);

  DepthImage depth(3, 2, 1.25);
  depth.at(2, 1) = 0.0;
  write_depth_image(depth, dir / "d.depth");
  const DepthImage dback = read_depth_image(dir / "d.depth");
  CHECK(dback.width == 3);
  CHECK(dback.depth == depth.depth);
}

}  // namespace
}  // namespace clip2
