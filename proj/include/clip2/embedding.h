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
#ifndef CLIP2_EMBEDDING_H_
#define CLIP2_EMBEDDING_H_

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace clip2 {

// A feature in the shared C-dimensional text/image/point space.
struct EmbeddingVector {
  Eigen::VectorXd values;

  EmbeddingVector() = default;
  explicit EmbeddingVector(Eigen::VectorXd v) : values(std::move(v)) {}

  int dim() const { return static_cast<int>(values.size()); }
  bool finite() const { return values.allFinite(); }
  // Throws NumericalError("degenerate embedding") on a zero or non-finite vector.
  EmbeddingVector normalized() const;
};

// Frozen text / image features. Image features are looked up by crop id.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual int dim() const = 0;
  virtual EmbeddingVector embed_text(const std::string& caption) const = 0;
  virtual EmbeddingVector embed_image(const std::string& crop_id) const = 0;
};

// Table keyed by caption or crop id, persisted as an "EMB1" file:
//   "EMB1" | u32 C | u32 count | count x (u32 key_len, key bytes, C x f32)
class PrecomputedEmbeddings : public EmbeddingProvider {
 public:
  explicit PrecomputedEmbeddings(int dim);

  int dim() const override { return dim_; }
  EmbeddingVector embed_text(const std::string& caption) const override { return lookup(caption); }
  EmbeddingVector embed_image(const std::string& crop_id) const override { return lookup(crop_id); }

  void insert(const std::string& key, const EmbeddingVector& value);
  bool contains(const std::string& key) const { return table_.count(key) != 0; }
  std::size_t size() const { return table_.size(); }
  // Throws ConfigError naming the key when absent.
  EmbeddingVector lookup(const std::string& key) const;

  std::string encode() const;
  static PrecomputedEmbeddings decode(const std::string& bytes);
  void write(const std::string& path) const;
  static PrecomputedEmbeddings read(const std::string& path);

 private:
  int dim_;
  std::map<std::string, EmbeddingVector> table_;
};

// Deterministic stand-in for a frozen vision-language model.
//
// Registered class names get mutually orthogonal unit anchors (requires
// dim >= class count). Text for a class name or its templated prompt maps
// to the anchor. Image crop ids of the form "class:<k>/<rest>" map to the
// anchor of class k plus seeded noise of the configured scale. Any other key
// maps to a seeded random unit vector derived from the key.
class SyntheticEmbeddings : public EmbeddingProvider {
 public:
  SyntheticEmbeddings(int dim, std::uint64_t seed, std::vector<std::string> class_names = {},
                      std::string prompt_template = "point cloud of a {}.", double image_noise = 0.3);

  int dim() const override { return dim_; }
  EmbeddingVector embed_text(const std::string& caption) const override;
  EmbeddingVector embed_image(const std::string& crop_id) const override;

  const EmbeddingVector& anchor(std::size_t class_index) const { return anchors_.at(class_index); }
  // Image embedding of class k for an arbitrary crop key.
  EmbeddingVector image_for_class(std::size_t class_index, std::string_view key) const;
  static std::string crop_key(std::size_t class_index, std::string_view rest);

 private:
  EmbeddingVector random_unit(std::string_view key) const;

  int dim_;
  std::uint64_t seed_;
  std::vector<std::string> names_;
  std::string template_;
  double image_noise_;
  std::vector<EmbeddingVector> anchors_;
};

// Substitutes `name` for the single "{}" placeholder; throws InvalidArgument
// when the template does not contain exactly one.
std::string apply_template(std::string_view prompt_template, std::string_view name);

// Stable 64-bit FNV-1a, used for seeding and checkpoint digests.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 1469598103934665603ull);

}  // namespace clip2

#endif  // CLIP2_EMBEDDING_H_
