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
#include "clip2/embedding.h"

#include <cmath>
#include <random>

#include <Eigen/QR>

#include "clip2/binary_io.h"
#include "clip2/errors.h"

namespace clip2 {

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis) {
  std::uint64_t h = basis;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string apply_template(std::string_view prompt_template, std::string_view name) {
  const auto pos = prompt_template.find("{}");
  if (pos == std::string_view::npos || prompt_template.find("{}", pos + 2) != std::string_view::npos) {
    throw InvalidArgument("prompt template must contain exactly one {} placeholder: " + std::string(prompt_template));
  }
  std::string out(prompt_template.substr(0, pos));
  out.append(name);
  out.append(prompt_template.substr(pos + 2));
  return out;
}

EmbeddingVector EmbeddingVector::normalized() const {
  const double n = values.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw NumericalError("degenerate embedding");
  return EmbeddingVector(values / n);
}

PrecomputedEmbeddings::PrecomputedEmbeddings(int dim) : dim_(dim) {
  if (dim <= 0) throw InvalidArgument("embedding dimension must be positive");
}

void PrecomputedEmbeddings::insert(const std::string& key, const EmbeddingVector& value) {
  if (value.dim() != dim_) throw InvalidArgument("embedding '" + key + "' has wrong dimension");
  if (!value.finite()) throw InvalidArgument("embedding '" + key + "' is not finite");
  table_[key] = value;
}

EmbeddingVector PrecomputedEmbeddings::lookup(const std::string& key) const {
  auto it = table_.find(key);
  if (it == table_.end()) throw ConfigError("embedding provider has no entry for key '" + key + "'");
  return it->second;
}

std::string PrecomputedEmbeddings::encode() const {
  ByteWriter w;
  w.magic("EMB1");
  w.u32(static_cast<std::uint32_t>(dim_));
  w.u32(static_cast<std::uint32_t>(table_.size()));
  for (const auto& [key, value] : table_) {
    w.str(key);
    for (int i = 0; i < dim_; ++i) w.f32(static_cast<float>(value.values[i]));
  }
  return w.bytes();
}

PrecomputedEmbeddings PrecomputedEmbeddings::decode(const std::string& bytes) {
  ByteReader r(bytes, "EMB1");
  r.expect_magic("EMB1");
  const std::uint32_t dim = r.u32();
  const std::uint32_t count = r.u32();
  if (dim == 0 || dim > (1u << 20)) throw FormatError("EMB1: bad dimension");
  PrecomputedEmbeddings table(static_cast<int>(dim));
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string key = r.str();
    r.require(static_cast<std::uint64_t>(dim) * 4);
    Eigen::VectorXd v(dim);
    for (std::uint32_t k = 0; k < dim; ++k) v[k] = r.f32();
    if (table.contains(key)) throw FormatError("EMB1: duplicate key '" + key + "'");
    table.insert(key, EmbeddingVector(std::move(v)));
  }
  r.expect_end();
  return table;
}

void PrecomputedEmbeddings::write(const std::string& path) const { write_file(path, encode()); }

PrecomputedEmbeddings PrecomputedEmbeddings::read(const std::string& path) {
  try {
    return decode(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

SyntheticEmbeddings::SyntheticEmbeddings(int dim, std::uint64_t seed, std::vector<std::string> class_names,
                                         std::string prompt_template, double image_noise)
    : dim_(dim), seed_(seed), names_(std::move(class_names)), template_(std::move(prompt_template)),
      image_noise_(image_noise) {
  if (dim <= 0) throw InvalidArgument("embedding dimension must be positive");
  if (names_.size() > static_cast<std::size_t>(dim)) {
    throw InvalidArgument("synthetic embeddings: more classes than dimensions, anchors cannot be orthogonal");
  }
  apply_template(template_, "");
  if (names_.empty()) return;
  std::mt19937_64 rng(seed_ ^ 0x9e3779b97f4a7c15ull);
  std::normal_distribution<double> gauss;
  Eigen::MatrixXd basis(dim_, static_cast<Eigen::Index>(names_.size()));
  for (Eigen::Index c = 0; c < basis.cols(); ++c) {
    for (Eigen::Index r = 0; r < basis.rows(); ++r) basis(r, c) = gauss(rng);
  }
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(basis).householderQ() *
                            Eigen::MatrixXd::Identity(dim_, basis.cols());
  for (Eigen::Index c = 0; c < q.cols(); ++c) anchors_.emplace_back(q.col(c).normalized());
}

EmbeddingVector SyntheticEmbeddings::random_unit(std::string_view key) const {
  std::mt19937_64 rng(fnv1a64(key, seed_ * 1099511628211ull + 1469598103934665603ull));
  std::normal_distribution<double> gauss;
  Eigen::VectorXd v(dim_);
  for (int i = 0; i < dim_; ++i) v[i] = gauss(rng);
  return EmbeddingVector(v).normalized();
}

EmbeddingVector SyntheticEmbeddings::embed_text(const std::string& caption) const {
  for (std::size_t k = 0; k < names_.size(); ++k) {
    if (caption == names_[k] || caption == apply_template(template_, names_[k])) return anchors_[k];
  }
  return random_unit("text:" + caption);
}

std::string SyntheticEmbeddings::crop_key(std::size_t class_index, std::string_view rest) {
  return "class:" + std::to_string(class_index) + "/" + std::string(rest);
}

EmbeddingVector SyntheticEmbeddings::image_for_class(std::size_t class_index, std::string_view key) const {
  const EmbeddingVector noise = random_unit(std::string("image:") + std::string(key));
  return EmbeddingVector(anchors_.at(class_index).values + image_noise_ * noise.values).normalized();
}

EmbeddingVector SyntheticEmbeddings::embed_image(const std::string& crop_id) const {
  constexpr std::string_view prefix = "class:";
  if (crop_id.rfind(prefix, 0) == 0) {
    const auto slash = crop_id.find('/');
    const std::string digits = crop_id.substr(prefix.size(), slash - prefix.size());
    if (!digits.empty() && digits.find_first_not_of("0123456789") == std::string::npos) {
      const std::size_t k = std::stoul(digits);
      if (k < anchors_.size()) return image_for_class(k, crop_id);
    }
  }
  return random_unit("image:" + crop_id);
}

}  // namespace clip2
