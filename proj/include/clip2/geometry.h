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
#ifndef CLIP2_GEOMETRY_H_
#define CLIP2_GEOMETRY_H_

#include <array>
#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace clip2 {

using Point3 = Eigen::Vector3d;

struct PointCloud {
  std::vector<Point3> points;
  // Either empty or one value per point.
  std::vector<float> intensity;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_intensity() const { return !intensity.empty(); }
};

// Row-major grid of metric depths; values <= 0 (or non-finite) are invalid.
struct DepthImage {
  int width = 0;
  int height = 0;
  std::vector<double> depth;

  DepthImage() = default;
  DepthImage(int w, int h, double fill = 0.0);

  double at(int u, int v) const { return depth[static_cast<std::size_t>(v) * width + u]; }
  double& at(int u, int v) { return depth[static_cast<std::size_t>(v) * width + u]; }
  static bool valid(double d);
};

// Pinhole camera plus sensor poses.
//
// `camera_extrinsics` is the camera pose in the scene frame (camera -> scene)
// and `lidar_extrinsics` the LiDAR pose in the same frame (lidar -> scene), so
// a LiDAR point projects through K * camera^-1 * lidar. Indoor rigs keep the
// LiDAR pose at identity and the scene frame is the depth camera's world.
struct CameraCalibration {
  Eigen::Matrix3d intrinsics = Eigen::Matrix3d::Identity();
  Eigen::Matrix4d camera_extrinsics = Eigen::Matrix4d::Identity();
  Eigen::Matrix4d lidar_extrinsics = Eigen::Matrix4d::Identity();

  // Throws InvalidArgument when intrinsics are singular / not pinhole or an
  // extrinsic is not a proper rigid transform.
  void validate() const;

  // Rigid transform taking sensor-frame points into the camera frame.
  Eigen::Isometry3d sensor_to_camera() const;
  Eigen::Isometry3d camera_to_sensor() const;
};

struct Box2D {
  double u_min = 0, v_min = 0, u_max = 0, v_max = 0;
  double score = 1.0;
  std::size_t label_index = 0;

  bool valid() const;
  // Closed on every edge.
  bool contains(double u, double v) const {
    return u >= u_min && u <= u_max && v >= v_min && v <= v_max;
  }
};

struct PixelDepth {
  double u = 0, v = 0, d = 0;
  std::size_t index = 0;  // position of the source point in its cloud
};

struct Projection {
  std::vector<PixelDepth> pixels;  // points in front of the camera
  std::vector<std::size_t> behind;  // indices with camera-frame depth <= 0
};

// Foreground selection inside a box: median valid depth +/- half_width.
struct ForegroundBand {
  double half_width = 0.5;
};

struct Aabb {
  Point3 min;
  Point3 max;
  Point3 center() const { return 0.5 * (min + max); }
  bool contains(const Point3& p) const;
};

// Half-space representation of an extruded image box. Planes live in the
// camera frame; `to_camera` maps sensor points into it.
class Frustum {
 public:
  Frustum(const Box2D& box, const CameraCalibration& calib, double near, double far);

  bool contains(const Point3& sensor_point) const;

  double near() const { return near_; }
  double far() const { return far_; }
  const Box2D& box() const { return box_; }
  // Camera centre and unit direction through the box centre, in the sensor frame.
  Point3 axis_origin() const;
  Point3 axis_direction() const;
  double distance_to_axis(const Point3& sensor_point) const;

 private:
  Box2D box_;
  double near_, far_;
  Eigen::Isometry3d to_camera_;
  Eigen::Matrix3d intrinsics_;
  // Normals n with n . p_cam >= 0 for points inside: u >= u_min, u <= u_max,
  // v >= v_min, v <= v_max.
  std::array<Eigen::Vector3d, 4> planes_;
};

// Pixel + depth -> scene point (exact inverse of project_points).
Point3 unproject(double u, double v, double d, const CameraCalibration& calib);

PointCloud backproject_depth(const DepthImage& depth, const CameraCalibration& calib,
                             const Box2D& region, const ForegroundBand& band = {});

Projection project_points(const PointCloud& cloud, const CameraCalibration& calib);

Frustum build_frustum(const Box2D& box, const CameraCalibration& calib, double near,
                      double far);

PointCloud points_in_frustum(const PointCloud& cloud, const Frustum& frustum);

Aabb aabb(const PointCloud& cloud);

Point3 centroid(const PointCloud& cloud);

// Copies the selected points (and intensities) preserving order.
PointCloud subset(const PointCloud& cloud, const std::vector<std::size_t>& indices);

}  // namespace clip2

#endif  // CLIP2_GEOMETRY_H_
