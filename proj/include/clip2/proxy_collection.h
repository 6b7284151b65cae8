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
#ifndef CLIP2_PROXY_COLLECTION_H_
#define CLIP2_PROXY_COLLECTION_H_

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "clip2/clustering.h"
#include "clip2/embedding.h"
#include "clip2/geometry.h"

namespace clip2 {

// Caption list (the language proxies). Entries must be unique after
// lowercasing and trimming.
class VocabularyList {
 public:
  explicit VocabularyList(std::vector<std::string> captions);

  std::size_t size() const { return captions_.size(); }
  const std::string& operator[](std::size_t i) const { return captions_.at(i); }
  const std::vector<std::string>& captions() const { return captions_; }

  static std::string normalize(std::string_view caption);
  // One caption per line; blank lines are skipped.
  static VocabularyList read(const std::string& path);

 private:
  std::vector<std::string> captions_;
};

struct Detection {
  std::string scene_id;
  std::size_t index = 0;  // line order within the scene, counted before score filtering
  Box2D box;

  // Stable id of the image crop; doubles as the proxy instance id.
  std::string crop_id() const { return scene_id + "#" + std::to_string(index); }
};

// Detections grouped by scene, in file order.
using DetectionSet = std::map<std::string, std::vector<Detection>>;

// Tab-separated: scene_id u_min v_min u_max v_max score caption_index.
// Rows scoring below `score_threshold` are dropped; a caption index outside
// [0, vocabulary_size) is a format error.
DetectionSet parse_detections(const std::string& text, std::size_t vocabulary_size, double score_threshold = 0.3);
DetectionSet read_detections(const std::string& path, std::size_t vocabulary_size, double score_threshold = 0.3);
std::string format_detections(const std::vector<Detection>& detections);

struct TripletRecord {
  std::uint32_t caption_index = 0;
  EmbeddingVector image_embedding;
  PointCloud point_proxy;
  std::string scene_id;
  std::string instance_id;
};

struct CollectionConfig {
  ForegroundBand band;
  std::size_t min_points = 32;  // indoor
  double near = 0.5;            // outdoor frustum limits, meters
  double far = 80.0;
  double eps = 0.5;             // DBSCAN
  int min_pts = 5;
  std::size_t min_cluster_size = 20;
};

enum class SkipReason { kEmptyForeground, kTooFewPoints, kEmptyFrustum, kAllNoise };
const char* to_string(SkipReason reason);

struct SkippedDetection {
  std::string instance_id;
  SkipReason reason;
};

struct CollectionResult {
  std::vector<TripletRecord> records;
  std::vector<SkippedDetection> skipped;
};

// RGB-D path: back-project the foreground depth band inside each box.
CollectionResult collect_indoor(const std::string& scene_id, const DepthImage& depth, const CameraCalibration& calib,
                                const std::vector<Detection>& detections, const EmbeddingProvider& embeddings,
                                const CollectionConfig& config = {});

// LiDAR path: frustum crop, DBSCAN, cluster selection.
CollectionResult collect_outdoor(const std::string& scene_id, const PointCloud& cloud, const CameraCalibration& calib,
                                 const std::vector<Detection>& detections, const EmbeddingProvider& embeddings,
                                 const CollectionConfig& config = {});

// Repeat-factor class balancing over caption indices.
//
// Each epoch is the multiset in which every record of class c appears
// max(1, ceil(sqrt(t / f_c))) times, f_c being the fraction of records
// labelled c; epochs are shuffled with a seed derived from (seed, epoch).
class BalancedSampler {
 public:
  BalancedSampler(const std::vector<TripletRecord>& records, std::uint64_t seed, double threshold = 0.01);
  BalancedSampler(const std::vector<std::uint32_t>& classes, std::uint64_t seed, double threshold = 0.01);

  std::size_t next();
  std::size_t epoch_length() const { return epoch_template_.size(); }
  std::size_t epoch() const { return epoch_; }
  const std::map<std::uint32_t, std::size_t>& repeat_factors() const { return repeat_; }

  static std::size_t repeat_factor(std::size_t class_count, std::size_t total, double threshold);

 private:
  void reshuffle();

  std::uint64_t seed_;
  std::map<std::uint32_t, std::size_t> repeat_;
  std::vector<std::size_t> epoch_template_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
  std::size_t epoch_ = 0;
};

// "TRP1" | u32 C | u32 count | per record: u32 caption_index, C x f32,
// u32 n, n x (f32 x, y, z), u32-length-prefixed scene id and instance id.
std::string encode_triplets(const std::vector<TripletRecord>& records, int dim);
std::vector<TripletRecord> decode_triplets(const std::string& bytes, int* dim = nullptr);
void write_triplets(const std::vector<TripletRecord>& records, int dim, const std::string& path);
std::vector<TripletRecord> read_triplets(const std::string& path, int* dim = nullptr);

}  // namespace clip2

#endif  // CLIP2_PROXY_COLLECTION_H_
