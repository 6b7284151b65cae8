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
#include "clip2/proxy_collection.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <sstream>

#include "clip2/binary_io.h"
#include "clip2/errors.h"

namespace clip2 {

VocabularyList::VocabularyList(std::vector<std::string> captions) : captions_(std::move(captions)) {
  if (captions_.empty()) throw InvalidArgument("vocabulary must contain at least one caption");
  std::set<std::string> seen;
  for (const auto& c : captions_) {
    const std::string key = normalize(c);
    if (key.empty()) throw InvalidArgument("vocabulary: empty caption");
    if (!seen.insert(key).second) throw InvalidArgument("vocabulary: duplicate caption '" + c + "'");
  }
}

std::string VocabularyList::normalize(std::string_view caption) {
  const auto first = caption.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = caption.find_last_not_of(" \t\r\n");
  std::string out(caption.substr(first, last - first + 1));
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

VocabularyList VocabularyList::read(const std::string& path) {
  std::istringstream in(read_file(path));
  std::vector<std::string> captions;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    captions.push_back(line);
  }
  try {
    return VocabularyList(std::move(captions));
  } catch (const InvalidArgument& e) {
    throw FormatError(path + ": " + e.what());
  }
}

DetectionSet parse_detections(const std::string& text, std::size_t vocabulary_size, double score_threshold) {
  DetectionSet out;
  std::map<std::string, std::size_t> next_index;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::istringstream row(line);
    std::string field;
    while (std::getline(row, field, '\t')) fields.push_back(field);
    const std::string where = "detections line " + std::to_string(line_no);
    if (fields.size() != 7) throw FormatError(where + ": expected 7 tab-separated fields");
    Detection det;
    det.scene_id = fields[0];
    double values[5];
    long long label = 0;
    try {
      for (int i = 0; i < 5; ++i) {
        std::size_t used = 0;
        values[i] = std::stod(fields[static_cast<std::size_t>(i + 1)], &used);
        if (used != fields[static_cast<std::size_t>(i + 1)].size()) throw std::invalid_argument("trailing");
      }
      std::size_t used = 0;
      label = std::stoll(fields[6], &used);
      if (used != fields[6].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw FormatError(where + ": bad number");
    }
    if (label < 0 || static_cast<std::size_t>(label) >= vocabulary_size) {
      throw FormatError(where + ": caption index out of vocabulary range");
    }
    det.box = {values[0], values[1], values[2], values[3], values[4], static_cast<std::size_t>(label)};
    if (!det.box.valid()) throw FormatError(where + ": invalid box or score");
    det.index = next_index[det.scene_id]++;
    if (det.box.score < score_threshold) continue;
    out[det.scene_id].push_back(std::move(det));
  }
  return out;
}

DetectionSet read_detections(const std::string& path, std::size_t vocabulary_size, double score_threshold) {
  try {
    return parse_detections(read_file(path), vocabulary_size, score_threshold);
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

std::string format_detections(const std::vector<Detection>& detections) {
  std::ostringstream out;
  out.precision(17);
  for (const auto& d : detections) {
    out << d.scene_id << '\t' << d.box.u_min << '\t' << d.box.v_min << '\t' << d.box.u_max << '\t' << d.box.v_max
        << '\t' << d.box.score << '\t' << d.box.label_index << '\n';
  }
  return out.str();
}

const char* to_string(SkipReason reason) {
  switch (reason) {
    case SkipReason::kEmptyForeground: return "empty-foreground";
    case SkipReason::kTooFewPoints: return "too-few-points";
    case SkipReason::kEmptyFrustum: return "empty-frustum";
    case SkipReason::kAllNoise: return "all-noise";
  }
  return "unknown";
}

namespace {

TripletRecord make_record(const std::string& scene_id, const Detection& det, PointCloud proxy,
                          const EmbeddingProvider& embeddings) {
  TripletRecord rec;
  rec.caption_index = static_cast<std::uint32_t>(det.box.label_index);
  rec.image_embedding = embeddings.embed_image(det.crop_id());
  if (rec.image_embedding.dim() != embeddings.dim()) throw ConfigError("image embedding has wrong dimension");
  rec.point_proxy = std::move(proxy);
  rec.scene_id = scene_id;
  rec.instance_id = det.crop_id();
  return rec;
}

}  // namespace

CollectionResult collect_indoor(const std::string& scene_id, const DepthImage& depth, const CameraCalibration& calib,
                                const std::vector<Detection>& detections, const EmbeddingProvider& embeddings,
                                const CollectionConfig& config) {
  calib.validate();
  CollectionResult result;
  for (const auto& det : detections) {
    PointCloud proxy = backproject_depth(depth, calib, det.box, config.band);
    if (proxy.empty()) {
      result.skipped.push_back({det.crop_id(), SkipReason::kEmptyForeground});
    } else if (proxy.size() < config.min_points) {
      result.skipped.push_back({det.crop_id(), SkipReason::kTooFewPoints});
    } else {
      result.records.push_back(make_record(scene_id, det, std::move(proxy), embeddings));
    }
  }
  return result;
}

CollectionResult collect_outdoor(const std::string& scene_id, const PointCloud& cloud, const CameraCalibration& calib,
                                 const std::vector<Detection>& detections, const EmbeddingProvider& embeddings,
                                 const CollectionConfig& config) {
  calib.validate();
  CollectionResult result;
  for (const auto& det : detections) {
    const Frustum frustum = build_frustum(det.box, calib, config.near, config.far);
    const PointCloud inside = points_in_frustum(cloud, frustum);
    if (inside.empty()) {
      result.skipped.push_back({det.crop_id(), SkipReason::kEmptyFrustum});
      continue;
    }
    const ClusterLabeling labels = dbscan(inside, config.eps, config.min_pts);
    SelectionPolicy policy;
    policy.min_cluster_size = config.min_cluster_size;
    policy.axis = frustum;
    auto proxy = select_proxy_cluster(inside, labels, policy);
    if (!proxy) {
      result.skipped.push_back({det.crop_id(), SkipReason::kAllNoise});
      continue;
    }
    result.records.push_back(make_record(scene_id, det, std::move(*proxy), embeddings));
  }
  return result;
}

std::size_t BalancedSampler::repeat_factor(std::size_t class_count, std::size_t total, double threshold) {
  if (class_count == 0 || total == 0) throw InvalidArgument("repeat_factor: empty class");
  // t / f_c written as t * total / count keeps exact ratios exact.
  const double ratio = threshold * static_cast<double>(total) / static_cast<double>(class_count);
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(std::sqrt(ratio))));
}

namespace {

std::vector<std::uint32_t> classes_of(const std::vector<TripletRecord>& records) {
  std::vector<std::uint32_t> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.caption_index);
  return out;
}

}  // namespace

BalancedSampler::BalancedSampler(const std::vector<TripletRecord>& records, std::uint64_t seed, double threshold)
    : BalancedSampler(classes_of(records), seed, threshold) {}

BalancedSampler::BalancedSampler(const std::vector<std::uint32_t>& classes, std::uint64_t seed, double threshold)
    : seed_(seed) {
  if (classes.empty()) throw InvalidArgument("balanced sampler: empty dataset");
  if (!(threshold >= 0.0)) throw InvalidArgument("balanced sampler: threshold must be >= 0");
  std::map<std::uint32_t, std::size_t> counts;
  for (auto c : classes) ++counts[c];
  for (const auto& [c, n] : counts) repeat_[c] = repeat_factor(n, classes.size(), threshold);
  for (std::size_t i = 0; i < classes.size(); ++i) {
    epoch_template_.insert(epoch_template_.end(), repeat_[classes[i]], i);
  }
  reshuffle();
}

void BalancedSampler::reshuffle() {
  order_ = epoch_template_;
  std::seed_seq seq{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32),
                    static_cast<std::uint32_t>(epoch_), static_cast<std::uint32_t>(epoch_ >> 32)};
  std::mt19937_64 rng(seq);
  std::shuffle(order_.begin(), order_.end(), rng);
  cursor_ = 0;
}

std::size_t BalancedSampler::next() {
  if (cursor_ == order_.size()) {
    ++epoch_;
    reshuffle();
  }
  return order_[cursor_++];
}

std::string encode_triplets(const std::vector<TripletRecord>& records, int dim) {
  if (dim <= 0) throw InvalidArgument("triplets: embedding dimension must be positive");
  ByteWriter w;
  w.magic("TRP1");
  w.u32(static_cast<std::uint32_t>(dim));
  w.u32(static_cast<std::uint32_t>(records.size()));
  for (const auto& rec : records) {
    if (rec.image_embedding.dim() != dim) throw InvalidArgument("triplets: record " + rec.instance_id + " has wrong embedding dimension");
    if (rec.point_proxy.empty()) throw InvalidArgument("triplets: record " + rec.instance_id + " has an empty proxy");
    w.u32(rec.caption_index);
    for (int i = 0; i < dim; ++i) w.f32(static_cast<float>(rec.image_embedding.values[i]));
    w.u32(static_cast<std::uint32_t>(rec.point_proxy.size()));
    for (const auto& p : rec.point_proxy.points) {
      w.f32(static_cast<float>(p.x()));
      w.f32(static_cast<float>(p.y()));
      w.f32(static_cast<float>(p.z()));
    }
    w.str(rec.scene_id);
    w.str(rec.instance_id);
  }
  return w.bytes();
}

std::vector<TripletRecord> decode_triplets(const std::string& bytes, int* dim_out) {
  ByteReader r(bytes, "TRP1");
  r.expect_magic("TRP1");
  const std::uint32_t dim = r.u32();
  const std::uint32_t count = r.u32();
  if (dim == 0 || dim > (1u << 20)) throw FormatError("TRP1: bad dimension");
  std::vector<TripletRecord> records;
  for (std::uint32_t i = 0; i < count; ++i) {
    TripletRecord rec;
    rec.caption_index = r.u32();
    r.require(static_cast<std::uint64_t>(dim) * 4);
    Eigen::VectorXd v(dim);
    for (std::uint32_t k = 0; k < dim; ++k) v[k] = r.f32();
    rec.image_embedding = EmbeddingVector(std::move(v));
    const std::uint32_t n = r.u32();
    if (n == 0) throw FormatError("TRP1: empty point proxy");
    r.require(static_cast<std::uint64_t>(n) * 12);
    rec.point_proxy.points.reserve(n);
    for (std::uint32_t k = 0; k < n; ++k) {
      const double x = r.f32(), y = r.f32(), z = r.f32();
      rec.point_proxy.points.emplace_back(x, y, z);
    }
    rec.scene_id = r.str();
    rec.instance_id = r.str();
    records.push_back(std::move(rec));
  }
  r.expect_end();
  if (dim_out) *dim_out = static_cast<int>(dim);
  return records;
}

void write_triplets(const std::vector<TripletRecord>& records, int dim, const std::string& path) {
  write_file(path, encode_triplets(records, dim));
}

std::vector<TripletRecord> read_triplets(const std::string& path, int* dim) {
  try {
    return decode_triplets(read_file(path), dim);
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

}  // namespace clip2
