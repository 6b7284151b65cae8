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
#include "clip2/geometry.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "clip2/errors.h"

namespace clip2 {
namespace {

constexpr double kRigidTolerance = 1e-6;

void check_rigid(const Eigen::Matrix4d& m, const char* name) {
  if (!m.allFinite()) throw InvalidArgument(std::string(name) + ": non-finite entries");
  const Eigen::Matrix3d r = m.topLeftCorner<3, 3>();
  const double ortho = (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  if (ortho > kRigidTolerance || std::abs(r.determinant() - 1.0) > kRigidTolerance) {
    throw InvalidArgument(std::string(name) + ": rotation block is not orthonormal with det +1");
  }
  if (m.row(3).transpose() != Eigen::Vector4d(0, 0, 0, 1)) {
    throw InvalidArgument(std::string(name) + ": last row must be [0 0 0 1]");
  }
}

Eigen::Isometry3d to_isometry(const Eigen::Matrix4d& m) {
  Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
  t.linear() = m.topLeftCorner<3, 3>();
  t.translation() = m.topRightCorner<3, 1>();
  return t;
}

double median_of(std::vector<double> values) {
  const std::size_t n = values.size();
  auto mid = values.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(values.begin(), mid, values.end());
  if (n % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(values.begin(), mid);
  return 0.5 * (lower + upper);
}

}  // namespace

DepthImage::DepthImage(int w, int h, double fill) : width(w), height(h) {
  if (w <= 0 || h <= 0) throw InvalidArgument("depth image dimensions must be positive");
  depth.assign(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill);
}

bool DepthImage::valid(double d) { return std::isfinite(d) && d > 0.0; }

void CameraCalibration::validate() const {
  if (!intrinsics.allFinite()) throw InvalidArgument("intrinsics: non-finite entries");
  if (intrinsics(0, 0) == 0.0 || intrinsics(1, 1) == 0.0) {
    throw InvalidArgument("intrinsics: focal lengths must be nonzero");
  }
  if (intrinsics(1, 0) != 0.0 || intrinsics(2, 0) != 0.0 || intrinsics(2, 1) != 0.0 ||
      intrinsics(2, 2) != 1.0) {
    throw InvalidArgument("intrinsics: expected upper-triangular pinhole matrix with K[2][2] = 1");
  }
  check_rigid(camera_extrinsics, "camera_extrinsics");
  check_rigid(lidar_extrinsics, "lidar_extrinsics");
}

Eigen::Isometry3d CameraCalibration::sensor_to_camera() const {
  return to_isometry(camera_extrinsics).inverse(Eigen::Isometry) * to_isometry(lidar_extrinsics);
}

Eigen::Isometry3d CameraCalibration::camera_to_sensor() const {
  return to_isometry(lidar_extrinsics).inverse(Eigen::Isometry) * to_isometry(camera_extrinsics);
}

bool Box2D::valid() const {
  return std::isfinite(u_min) && std::isfinite(v_min) && std::isfinite(u_max) &&
         std::isfinite(v_max) && u_min < u_max && v_min < v_max && score >= 0.0 && score <= 1.0;
}

bool Aabb::contains(const Point3& p) const {
  return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
}

Frustum::Frustum(const Box2D& box, const CameraCalibration& calib, double near, double far)
    : box_(box), near_(near), far_(far) {
  if (!(near < far)) throw InvalidArgument("frustum: near must be < far");
  if (near < 0.0) throw InvalidArgument("frustum: near must be non-negative");
  if (!box.valid()) throw InvalidArgument("frustum: invalid box");
  calib.validate();
  to_camera_ = calib.sensor_to_camera();
  intrinsics_ = calib.intrinsics;
  const Eigen::Vector3d row_u = intrinsics_.row(0).transpose();
  const Eigen::Vector3d row_v = intrinsics_.row(1).transpose();
  const Eigen::Vector3d unit_z(0, 0, 1);
  planes_[0] = row_u - box.u_min * unit_z;
  planes_[1] = box.u_max * unit_z - row_u;
  planes_[2] = row_v - box.v_min * unit_z;
  planes_[3] = box.v_max * unit_z - row_v;
}

bool Frustum::contains(const Point3& sensor_point) const {
  const Eigen::Vector3d p = to_camera_ * sensor_point;
  if (!(p.z() > 0.0 && p.z() > near_ && p.z() < far_)) return false;
  for (const auto& n : planes_) {
    if (n.dot(p) < 0.0) return false;
  }
  return true;
}

Point3 Frustum::axis_origin() const { return to_camera_.inverse(Eigen::Isometry).translation(); }

Point3 Frustum::axis_direction() const {
  const double uc = 0.5 * (box_.u_min + box_.u_max);
  const double vc = 0.5 * (box_.v_min + box_.v_max);
  const Eigen::Vector3d ray_cam = intrinsics_.inverse() * Eigen::Vector3d(uc, vc, 1.0);
  return (to_camera_.linear().transpose() * ray_cam).normalized();
}

double Frustum::distance_to_axis(const Point3& sensor_point) const {
  const Eigen::Vector3d w = sensor_point - axis_origin();
  const Eigen::Vector3d dir = axis_direction();
  return (w - w.dot(dir) * dir).norm();
}

Point3 unproject(double u, double v, double d, const CameraCalibration& calib) {
  const Eigen::Vector3d p_cam = calib.intrinsics.inverse() * Eigen::Vector3d(u * d, v * d, d);
  return calib.camera_to_sensor() * p_cam;
}

PointCloud backproject_depth(const DepthImage& depth, const CameraCalibration& calib,
                             const Box2D& region, const ForegroundBand& band) {
  calib.validate();
  if (depth.depth.size() != static_cast<std::size_t>(depth.width) * depth.height) {
    throw InvalidArgument("depth image: grid size does not match width x height");
  }
  if (!region.valid() || region.u_min < 0 || region.v_min < 0 ||
      region.u_max > depth.width || region.v_max > depth.height) {
    throw InvalidArgument("backproject_depth: region outside image bounds");
  }
  if (!(band.half_width >= 0.0)) throw InvalidArgument("foreground band half-width must be >= 0");

  const int u0 = static_cast<int>(std::ceil(region.u_min));
  const int u1 = std::min(static_cast<int>(std::floor(region.u_max)), depth.width - 1);
  const int v0 = static_cast<int>(std::ceil(region.v_min));
  const int v1 = std::min(static_cast<int>(std::floor(region.v_max)), depth.height - 1);

  std::vector<double> valid_depths;
  for (int v = v0; v <= v1; ++v) {
    for (int u = u0; u <= u1; ++u) {
      if (DepthImage::valid(depth.at(u, v))) valid_depths.push_back(depth.at(u, v));
    }
  }
  PointCloud out;
  if (valid_depths.empty()) return out;
  const double med = median_of(valid_depths);
  const double lo = med - band.half_width;
  const double hi = med + band.half_width;

  const Eigen::Matrix3d k_inv = calib.intrinsics.inverse();
  const Eigen::Isometry3d cam_to_sensor = calib.camera_to_sensor();
  for (int v = v0; v <= v1; ++v) {
    for (int u = u0; u <= u1; ++u) {
      const double d = depth.at(u, v);
      if (!DepthImage::valid(d) || d < lo || d > hi) continue;
      out.points.push_back(cam_to_sensor * (k_inv * Eigen::Vector3d(u * d, v * d, d)));
    }
  }
  return out;
}

Projection project_points(const PointCloud& cloud, const CameraCalibration& calib) {
  calib.validate();
  const Eigen::Isometry3d to_cam = calib.sensor_to_camera();
  Projection out;
  out.pixels.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Eigen::Vector3d p = to_cam * cloud.points[i];
    if (!(p.z() > 0.0)) {
      out.behind.push_back(i);
      continue;
    }
    const Eigen::Vector3d q = calib.intrinsics * p;
    out.pixels.push_back({q.x() / q.z(), q.y() / q.z(), p.z(), i});
  }
  return out;
}

Frustum build_frustum(const Box2D& box, const CameraCalibration& calib, double near, double far) {
  return Frustum(box, calib, near, far);
}

PointCloud points_in_frustum(const PointCloud& cloud, const Frustum& frustum) {
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (frustum.contains(cloud.points[i])) keep.push_back(i);
  }
  return subset(cloud, keep);
}

Aabb aabb(const PointCloud& cloud) {
  if (cloud.empty()) throw InvalidArgument("aabb: empty cloud");
  Aabb box{cloud.points.front(), cloud.points.front()};
  for (const auto& p : cloud.points) {
    box.min = box.min.cwiseMin(p);
    box.max = box.max.cwiseMax(p);
  }
  return box;
}

Point3 centroid(const PointCloud& cloud) {
  if (cloud.empty()) throw InvalidArgument("centroid: empty cloud");
  Point3 sum = Point3::Zero();
  for (const auto& p : cloud.points) sum += p;
  return sum / static_cast<double>(cloud.size());
}

PointCloud subset(const PointCloud& cloud, const std::vector<std::size_t>& indices) {
  PointCloud out;
  out.points.reserve(indices.size());
  for (std::size_t i : indices) out.points.push_back(cloud.points.at(i));
  if (cloud.has_intensity()) {
    out.intensity.reserve(indices.size());
    for (std::size_t i : indices) out.intensity.push_back(cloud.intensity.at(i));
  }
  return out;
}

}  // namespace clip2
