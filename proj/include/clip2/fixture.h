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
#ifndef CLIP2_FIXTURE_H_
#define CLIP2_FIXTURE_H_

#include <cstdint>
#include <string>
#include <vector>

#include "clip2/evaluation.h"
#include "clip2/geometry.h"
#include "clip2/proxy_collection.h"

namespace clip2 {

enum class SceneType { kIndoor, kOutdoor };
const char* to_string(SceneType type);
SceneType parse_scene_type(const std::string& text);

// Primitive solids used as per-class characteristic shapes.
enum class ShapeKind { kCube, kSphere, kPole, kPlate, kRod };
ShapeKind shape_for_class(std::size_t class_index);

struct FixtureSpec {
  std::vector<std::string> class_names = {"cube", "ball", "pole"};
  int objects_per_class = 20;
  double held_out_fraction = 0.25;
  SceneType scene_type = SceneType::kIndoor;
  int objects_per_scene = 3;
  int embed_dim = 16;
  // Detections below the collection threshold, added per scene.
  int distractors_per_scene = 1;
  std::uint64_t seed = 7;

  void validate() const;
};

struct FixtureObject {
  std::size_t class_index = 0;
  ShapeKind shape = ShapeKind::kCube;
  Point3 center;                // sensor frame
  Eigen::Matrix3d rotation;     // object -> sensor frame
  Eigen::Vector3d extent;       // shape-specific size parameters
};

struct FixtureScene {
  std::string scene_id;
  SceneType type = SceneType::kIndoor;
  CameraCalibration calib;
  DepthImage depth;   // indoor
  PointCloud cloud;   // outdoor
  std::vector<FixtureObject> objects;
  std::vector<Detection> detections;  // objects first (index = object order), then distractors
  std::vector<LabeledInstance> labels;
};

struct FixtureSplit {
  std::string name;  // "train" or "test"
  std::vector<FixtureScene> scenes;
};

struct Fixture {
  FixtureSpec spec;
  std::vector<FixtureSplit> splits;
};

Fixture generate_fixture(const FixtureSpec& spec);

// Writes vocabulary.txt, classes.txt, embeddings.emb, fixture.txt and one
// directory per split holding scenes.txt, detections.tsv, labels.tsv and the
// per-scene .calib / .depth / .pcf files.
void write_fixture(const Fixture& fixture, const std::string& directory);

// Ray-casts one primitive; returns the hit distance along `dir` from
// `origin` or a negative value on a miss.
double intersect(const FixtureObject& object, const Eigen::Vector3d& origin, const Eigen::Vector3d& dir);

// Uniform-ish surface samples of a primitive, in the sensor frame.
std::vector<Point3> sample_surface(const FixtureObject& object, std::size_t count, std::uint64_t seed);

}  // namespace clip2

#endif  // CLIP2_FIXTURE_H_
