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
#include "clip2/fixture.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>

#include "clip2/binary_io.h"
#include "clip2/embedding.h"
#include "clip2/errors.h"
#include "clip2/geometry_io.h"
#include "clip2/zero_shot.h"

namespace clip2 {
namespace {

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

Eigen::Matrix3d axis_angle(const Eigen::Vector3d& axis, double angle) {
  return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

// Rotation taking local +z onto `target`.
Eigen::Matrix3d align_z(const Eigen::Vector3d& target) {
  return Eigen::Quaterniond::FromTwoVectors(Eigen::Vector3d::UnitZ(), target.normalized()).toRotationMatrix();
}

bool is_box(ShapeKind s) { return s == ShapeKind::kCube || s == ShapeKind::kPlate; }

Eigen::Matrix4d pose(const Eigen::Matrix3d& r, const Eigen::Vector3d& t) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = r;
  m.topRightCorner<3, 1>() = t;
  return m;
}

// Object dimensions. Indoor objects are desk-sized, outdoor ones street-sized.
FixtureObject make_object(std::size_t class_index, bool outdoor, Rng& rng) {
  FixtureObject o;
  o.class_index = class_index;
  o.shape = shape_for_class(class_index);
  const double s = outdoor ? 3.5 : 1.0;
  switch (o.shape) {
    case ShapeKind::kCube: {
      const double h = s * uniform(rng, 0.2, 0.28);
      o.extent = {h, h, h};
      break;
    }
    case ShapeKind::kSphere:
      o.extent = {s * uniform(rng, 0.2, 0.28), 0, 0};
      break;
    case ShapeKind::kPole:
      o.extent = {s * uniform(rng, 0.04, 0.06), 0, s * uniform(rng, 0.35, 0.45)};
      break;
    case ShapeKind::kPlate: {
      const double a = s * uniform(rng, 0.28, 0.36);
      o.extent = {a, a, s * 0.02};
      break;
    }
    case ShapeKind::kRod:
      o.extent = {s * uniform(rng, 0.04, 0.06), 0, s * uniform(rng, 0.35, 0.45)};
      break;
  }
  return o;
}

// Orientation in a frame whose `up` and `toward_camera` axes are given.
Eigen::Matrix3d orient(ShapeKind shape, const Eigen::Vector3d& up, const Eigen::Vector3d& toward_camera, Rng& rng) {
  const Eigen::Vector3d side = up.cross(toward_camera).normalized();
  switch (shape) {
    case ShapeKind::kCube:
      return axis_angle(up, uniform(rng, 0, std::numbers::pi / 2)) * axis_angle(side, uniform(rng, -0.3, 0.3));
    case ShapeKind::kSphere:
      return axis_angle(up, uniform(rng, 0, 2 * std::numbers::pi));
    case ShapeKind::kPole:
      return axis_angle(side, uniform(rng, -0.15, 0.15)) * align_z(up);
    case ShapeKind::kPlate:
      return axis_angle(up, uniform(rng, -0.6, 0.6)) * axis_angle(side, uniform(rng, -0.3, 0.3)) *
             align_z(toward_camera);
    case ShapeKind::kRod:
      return axis_angle(up, uniform(rng, -0.3, 0.3)) * align_z(side);
  }
  return Eigen::Matrix3d::Identity();
}

double object_half_height(const FixtureObject& o, const Eigen::Vector3d& up) {
  // Conservative vertical half-extent used to rest outdoor objects on the ground.
  if (o.shape == ShapeKind::kSphere) return o.extent.x();
  Eigen::Vector3d local_up = o.rotation.transpose() * up;
  if (is_box(o.shape)) return local_up.cwiseAbs().dot(o.extent);
  const double r = o.extent.x(), h = o.extent.z();
  return std::abs(local_up.z()) * h + std::sqrt(std::max(0.0, 1 - local_up.z() * local_up.z())) * r;
}

Box2D padded_box(double u0, double v0, double u1, double v1, int width, int height, double pad) {
  Box2D b;
  b.u_min = std::max(0.0, u0 - pad);
  b.v_min = std::max(0.0, v0 - pad);
  b.u_max = std::min(static_cast<double>(width - 1), u1 + pad);
  b.v_max = std::min(static_cast<double>(height - 1), v1 + pad);
  return b;
}

constexpr int kImageWidth = 320;
constexpr int kImageHeight = 240;

Eigen::Matrix3d fixture_intrinsics(double focal) {
  Eigen::Matrix3d k;
  k << focal, 0, kImageWidth / 2.0, 0, focal, kImageHeight / 2.0, 0, 0, 1;
  return k;
}

void add_distractors(FixtureScene& scene, const FixtureSpec& spec, Rng& rng) {
  for (int i = 0; i < spec.distractors_per_scene; ++i) {
    Detection d;
    d.scene_id = scene.scene_id;
    d.index = scene.detections.size();
    const double u = uniform(rng, 0, kImageWidth - 40), v = uniform(rng, 0, kImageHeight - 40);
    d.box = {u, v, u + uniform(rng, 10, 39), v + uniform(rng, 10, 39), uniform(rng, 0.05, 0.25),
             static_cast<std::size_t>(rng() % spec.class_names.size())};
    scene.detections.push_back(d);
  }
}

FixtureScene make_indoor_scene(const std::string& id, const std::vector<std::size_t>& classes,
                               const FixtureSpec& spec, Rng& rng) {
  FixtureScene scene;
  scene.scene_id = id;
  scene.type = SceneType::kIndoor;
  scene.calib.intrinsics = fixture_intrinsics(300.0);
  const Eigen::Matrix3d tilt = axis_angle(Eigen::Vector3d::UnitX(), uniform(rng, -0.05, 0.05) - 0.15);
  scene.calib.camera_extrinsics = pose(tilt, Eigen::Vector3d(uniform(rng, -1, 1), 1.2, uniform(rng, -1, 1)));
  const Eigen::Isometry3d cam_to_scene = scene.calib.camera_to_sensor();

  // Objects are laid out in the camera frame (x right, y down, z forward).
  const Eigen::Vector3d up_cam(0, -1, 0), toward_cam(0, 0, -1);
  const double slot_width = 2.4 / static_cast<double>(classes.size());
  std::vector<FixtureObject> cam_objects;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    FixtureObject o = make_object(classes[i], false, rng);
    const double x = -1.2 + slot_width * (static_cast<double>(i) + 0.5) + uniform(rng, -0.1, 0.1);
    o.center = {x, uniform(rng, -0.15, 0.15), uniform(rng, 2.7, 3.3)};
    o.rotation = orient(o.shape, up_cam, toward_cam, rng);
    cam_objects.push_back(o);
  }

  constexpr double kWallDepth = 6.0;
  scene.depth = DepthImage(kImageWidth, kImageHeight, kWallDepth);
  const Eigen::Matrix3d k_inv = scene.calib.intrinsics.inverse();
  std::vector<std::array<double, 4>> bounds(cam_objects.size(), {1e9, 1e9, -1e9, -1e9});
  std::vector<std::size_t> pixel_counts(cam_objects.size(), 0);
  for (int v = 0; v < kImageHeight; ++v) {
    for (int u = 0; u < kImageWidth; ++u) {
      const Eigen::Vector3d dir = k_inv * Eigen::Vector3d(u, v, 1.0);  // unit z component
      double best = kWallDepth;
      int hit = -1;
      for (std::size_t i = 0; i < cam_objects.size(); ++i) {
        const double t = intersect(cam_objects[i], Eigen::Vector3d::Zero(), dir);
        if (t > 0 && t < best) {
          best = t;
          hit = static_cast<int>(i);
        }
      }
      scene.depth.at(u, v) = best;
      if (hit >= 0) {
        auto& b = bounds[static_cast<std::size_t>(hit)];
        b = {std::min(b[0], double(u)), std::min(b[1], double(v)), std::max(b[2], double(u)), std::max(b[3], double(v))};
        ++pixel_counts[static_cast<std::size_t>(hit)];
      }
    }
  }
  for (std::size_t i = 0; i < cam_objects.size(); ++i) {
    if (pixel_counts[i] == 0) continue;
    FixtureObject o = cam_objects[i];
    o.center = cam_to_scene * o.center;
    o.rotation = cam_to_scene.linear() * o.rotation;
    Detection d;
    d.scene_id = id;
    d.index = scene.detections.size();
    d.box = padded_box(bounds[i][0], bounds[i][1], bounds[i][2], bounds[i][3], kImageWidth, kImageHeight, 2.0);
    d.box.score = uniform(rng, 0.5, 1.0);
    d.box.label_index = o.class_index;
    scene.detections.push_back(d);
    scene.labels.push_back({d.crop_id(), o.class_index, o.center});
    scene.objects.push_back(o);
  }
  add_distractors(scene, spec, rng);
  return scene;
}

FixtureScene make_outdoor_scene(const std::string& id, const std::vector<std::size_t>& classes,
                                const FixtureSpec& spec, Rng& rng) {
  FixtureScene scene;
  scene.scene_id = id;
  scene.type = SceneType::kOutdoor;
  scene.calib.intrinsics = fixture_intrinsics(250.0);
  // Ego frame: x forward, y left, z up. Camera axes: x right, y down, z forward.
  Eigen::Matrix3d cam_axes;
  cam_axes.col(0) = Eigen::Vector3d(0, -1, 0);
  cam_axes.col(1) = Eigen::Vector3d(0, 0, -1);
  cam_axes.col(2) = Eigen::Vector3d(1, 0, 0);
  const Eigen::Matrix3d yaw = axis_angle(Eigen::Vector3d::UnitZ(), uniform(rng, -0.03, 0.03));
  scene.calib.camera_extrinsics = pose(yaw * cam_axes, Eigen::Vector3d(0.5, 0.0, 1.5));
  scene.calib.lidar_extrinsics = pose(Eigen::Matrix3d::Identity(), Eigen::Vector3d(0.0, 0.0, 1.8));
  const Eigen::Isometry3d ego_to_lidar = [&] {
    Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
    t.translation() = -Eigen::Vector3d(0.0, 0.0, 1.8);
    return t;
  }();

  const Eigen::Vector3d up(0, 0, 1), toward_cam(-1, 0, 0);
  const double slot_width = 8.0 / static_cast<double>(classes.size());
  PointCloud cloud;
  std::vector<FixtureObject> objects;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    FixtureObject o = make_object(classes[i], true, rng);
    o.rotation = orient(o.shape, up, toward_cam, rng);
    const double y = 4.0 - slot_width * (static_cast<double>(i) + 0.5) + uniform(rng, -0.3, 0.3);
    const double x = uniform(rng, 10.0, 13.0);
    o.center = {x, y, object_half_height(o, up) + 0.05};
    o.center = ego_to_lidar * o.center;
    o.rotation = ego_to_lidar.linear() * o.rotation;
    const auto surface = sample_surface(o, 700, rng());
    cloud.points.insert(cloud.points.end(), surface.begin(), surface.end());
    objects.push_back(o);
  }
  // Sparse ground returns, too thin to form DBSCAN clusters.
  const int ground = 400;
  for (int i = 0; i < ground; ++i) {
    cloud.points.push_back(ego_to_lidar * Eigen::Vector3d(uniform(rng, 2, 40), uniform(rng, -20, 20), 0.0));
  }
  scene.cloud = cloud;

  std::size_t offset = 0;
  for (const auto& o : objects) {
    PointCloud own;
    own.points.assign(cloud.points.begin() + static_cast<std::ptrdiff_t>(offset),
                      cloud.points.begin() + static_cast<std::ptrdiff_t>(offset + 700));
    offset += 700;
    const Projection proj = project_points(own, scene.calib);
    if (proj.pixels.empty()) continue;
    double u0 = 1e9, v0 = 1e9, u1 = -1e9, v1 = -1e9;
    for (const auto& px : proj.pixels) {
      u0 = std::min(u0, px.u);
      v0 = std::min(v0, px.v);
      u1 = std::max(u1, px.u);
      v1 = std::max(v1, px.v);
    }
    if (u1 < 0 || v1 < 0 || u0 > kImageWidth - 1 || v0 > kImageHeight - 1) continue;
    Detection d;
    d.scene_id = id;
    d.index = scene.detections.size();
    d.box = padded_box(u0, v0, u1, v1, kImageWidth, kImageHeight, 2.0);
    d.box.score = uniform(rng, 0.5, 1.0);
    d.box.label_index = o.class_index;
    scene.detections.push_back(d);
    scene.labels.push_back({d.crop_id(), o.class_index, o.center});
    scene.objects.push_back(o);
  }
  add_distractors(scene, spec, rng);
  return scene;
}

}  // namespace

const char* to_string(SceneType type) { return type == SceneType::kIndoor ? "indoor" : "outdoor"; }

SceneType parse_scene_type(const std::string& text) {
  if (text == "indoor") return SceneType::kIndoor;
  if (text == "outdoor") return SceneType::kOutdoor;
  throw ConfigError("unknown scene type '" + text + "' (expected indoor or outdoor)");
}

ShapeKind shape_for_class(std::size_t class_index) {
  static constexpr ShapeKind kOrder[] = {ShapeKind::kCube, ShapeKind::kSphere, ShapeKind::kPole, ShapeKind::kPlate,
                                         ShapeKind::kRod};
  return kOrder[class_index % 5];
}

void FixtureSpec::validate() const {
  if (class_names.empty()) throw ConfigError("fixture: need at least one class");
  if (objects_per_class < 1) throw ConfigError("fixture: objects per class must be >= 1");
  if (!(held_out_fraction >= 0.0 && held_out_fraction < 1.0)) throw ConfigError("fixture: held-out fraction in [0, 1)");
  if (objects_per_scene < 1 || objects_per_scene > 6) throw ConfigError("fixture: objects per scene in [1, 6]");
  if (embed_dim < static_cast<int>(class_names.size())) throw ConfigError("fixture: embedding dim must be >= class count");
  if (distractors_per_scene < 0) throw ConfigError("fixture: distractors must be >= 0");
  VocabularyList check(class_names);
}

double intersect(const FixtureObject& o, const Eigen::Vector3d& origin, const Eigen::Vector3d& dir) {
  const Eigen::Vector3d ol = o.rotation.transpose() * (origin - o.center);
  const Eigen::Vector3d dl = o.rotation.transpose() * dir;
  if (o.shape == ShapeKind::kSphere) {
    const double r = o.extent.x();
    const double a = dl.squaredNorm(), b = 2 * ol.dot(dl), c = ol.squaredNorm() - r * r;
    const double disc = b * b - 4 * a * c;
    if (disc < 0) return -1;
    const double t = (-b - std::sqrt(disc)) / (2 * a);
    return t > 0 ? t : -1;
  }
  if (is_box(o.shape)) {
    double t0 = -1e300, t1 = 1e300;
    for (int k = 0; k < 3; ++k) {
      if (std::abs(dl[k]) < 1e-15) {
        if (std::abs(ol[k]) > o.extent[k]) return -1;
        continue;
      }
      double a = (-o.extent[k] - ol[k]) / dl[k], b = (o.extent[k] - ol[k]) / dl[k];
      if (a > b) std::swap(a, b);
      t0 = std::max(t0, a);
      t1 = std::min(t1, b);
    }
    return (t0 <= t1 && t0 > 0) ? t0 : -1;
  }
  // Finite cylinder along local z.
  const double r = o.extent.x(), h = o.extent.z();
  double best = -1;
  auto consider = [&](double t) {
    if (t > 0 && (best < 0 || t < best)) best = t;
  };
  const double a = dl.x() * dl.x() + dl.y() * dl.y();
  if (a > 1e-15) {
    const double b = 2 * (ol.x() * dl.x() + ol.y() * dl.y());
    const double c = ol.x() * ol.x() + ol.y() * ol.y() - r * r;
    const double disc = b * b - 4 * a * c;
    if (disc >= 0) {
      for (double t : {(-b - std::sqrt(disc)) / (2 * a), (-b + std::sqrt(disc)) / (2 * a)}) {
        if (std::abs(ol.z() + t * dl.z()) <= h) consider(t);
      }
    }
  }
  if (std::abs(dl.z()) > 1e-15) {
    for (double zc : {-h, h}) {
      const double t = (zc - ol.z()) / dl.z();
      const Eigen::Vector3d p = ol + t * dl;
      if (p.x() * p.x() + p.y() * p.y() <= r * r) consider(t);
    }
  }
  return best;
}

std::vector<Point3> sample_surface(const FixtureObject& o, std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> gauss;
  std::vector<Point3> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Eigen::Vector3d local;
    if (o.shape == ShapeKind::kSphere) {
      local = Eigen::Vector3d(gauss(rng), gauss(rng), gauss(rng)).normalized() * o.extent.x();
    } else if (is_box(o.shape)) {
      const Eigen::Vector3d e = o.extent;
      const double areas[3] = {e.y() * e.z(), e.x() * e.z(), e.x() * e.y()};
      double pick = uniform(rng, 0, areas[0] + areas[1] + areas[2]);
      int axis = 0;
      while (axis < 2 && pick > areas[axis]) pick -= areas[axis++];
      for (int k = 0; k < 3; ++k) local[k] = uniform(rng, -e[k], e[k]);
      local[axis] = (rng() & 1) ? e[axis] : -e[axis];
    } else {
      const double r = o.extent.x(), h = o.extent.z();
      const double side = 2 * std::numbers::pi * r * 2 * h, caps = 2 * std::numbers::pi * r * r;
      const double theta = uniform(rng, 0, 2 * std::numbers::pi);
      if (uniform(rng, 0, side + caps) < side) {
        local = {r * std::cos(theta), r * std::sin(theta), uniform(rng, -h, h)};
      } else {
        const double rr = r * std::sqrt(uniform(rng, 0, 1));
        local = {rr * std::cos(theta), rr * std::sin(theta), (rng() & 1) ? h : -h};
      }
    }
    out.push_back(o.center + o.rotation * local);
  }
  return out;
}

Fixture generate_fixture(const FixtureSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  std::vector<std::size_t> train_classes, test_classes;
  const int held = static_cast<int>(std::lround(spec.objects_per_class * spec.held_out_fraction));
  for (std::size_t c = 0; c < spec.class_names.size(); ++c) {
    for (int i = 0; i < spec.objects_per_class; ++i) {
      (i < spec.objects_per_class - held ? train_classes : test_classes).push_back(c);
    }
  }
  Fixture fixture;
  fixture.spec = spec;
  for (const auto& [name, classes] : {std::pair{std::string("train"), train_classes}, std::pair{std::string("test"), test_classes}}) {
    FixtureSplit split;
    split.name = name;
    std::vector<std::size_t> order = classes;
    std::shuffle(order.begin(), order.end(), rng);
    const auto per_scene = static_cast<std::size_t>(spec.objects_per_scene);
    for (std::size_t start = 0, n = 0; start < order.size(); start += per_scene, ++n) {
      const std::vector<std::size_t> chunk(order.begin() + static_cast<std::ptrdiff_t>(start),
                                           order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), start + per_scene)));
      std::ostringstream id;
      id << name << '_' << std::setw(3) << std::setfill('0') << n;
      split.scenes.push_back(spec.scene_type == SceneType::kIndoor ? make_indoor_scene(id.str(), chunk, spec, rng)
                                                                   : make_outdoor_scene(id.str(), chunk, spec, rng));
    }
    fixture.splits.push_back(std::move(split));
  }
  return fixture;
}

void write_fixture(const Fixture& fixture, const std::string& directory) {
  namespace fs = std::filesystem;
  const FixtureSpec& spec = fixture.spec;
  fs::create_directories(directory);
  std::string names;
  for (const auto& n : spec.class_names) names += n + "\n";
  write_file(directory + "/vocabulary.txt", names);
  write_file(directory + "/classes.txt", names);

  SyntheticEmbeddings synth(spec.embed_dim, spec.seed, spec.class_names, kDefaultPromptTemplate);
  PrecomputedEmbeddings table(spec.embed_dim);
  for (std::size_t k = 0; k < spec.class_names.size(); ++k) {
    table.insert(apply_template(kDefaultPromptTemplate, spec.class_names[k]), synth.anchor(k));
  }

  std::ostringstream manifest;
  manifest << "classes\t" << spec.class_names.size() << "\nscene_type\t" << to_string(spec.scene_type) << '\n';
  for (const auto& split : fixture.splits) {
    const std::string dir = directory + "/" + split.name;
    fs::create_directories(dir);
    std::ostringstream scene_list;
    std::vector<Detection> detections;
    std::vector<LabeledInstance> labels;
    for (const auto& scene : split.scenes) {
      scene_list << scene.scene_id << '\t' << to_string(scene.type) << '\n';
      write_calibration(scene.calib, dir + "/" + scene.scene_id + ".calib");
      if (scene.type == SceneType::kIndoor) {
        write_depth_image(scene.depth, dir + "/" + scene.scene_id + ".depth");
      } else {
        write_point_cloud(scene.cloud, dir + "/" + scene.scene_id + ".pcf");
      }
      for (const auto& d : scene.detections) {
        detections.push_back(d);
        table.insert(d.crop_id(), synth.image_for_class(d.box.label_index, d.crop_id()));
      }
      labels.insert(labels.end(), scene.labels.begin(), scene.labels.end());
    }
    write_file(dir + "/scenes.txt", scene_list.str());
    write_file(dir + "/detections.tsv", format_detections(detections));
    write_file(dir + "/labels.tsv", format_labels(labels));
    manifest << split.name << "_scenes\t" << split.scenes.size() << '\n'
             << split.name << "_instances\t" << labels.size() << '\n';
  }
  table.write(directory + "/embeddings.emb");
  write_file(directory + "/fixture.txt", manifest.str());
}

}  // namespace clip2
