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
#ifndef CLIP2_TESTS_TEST_SUPPORT_H_
#define CLIP2_TESTS_TEST_SUPPORT_H_

#include <unistd.h>

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "clip2/contrastive.h"
#include "clip2/embedding.h"
#include "clip2/geometry.h"

namespace clip2::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("clip2_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  std::string str() const { return path_.string(); }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline Eigen::Matrix3d pinhole(double f, double cx, double cy) {
  Eigen::Matrix3d k;
  k << f, 0, cx, 0, f, cy, 0, 0, 1;
  return k;
}

inline EmbeddingVector random_unit(std::mt19937_64& rng, int dim) {
  std::normal_distribution<double> g;
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v[i] = g(rng);
  return EmbeddingVector(v.normalized());
}

inline std::vector<double> to_std(const EmbeddingVector& e) {
  return std::vector<double>(e.values.data(), e.values.data() + e.values.size());
}

// Batch of random unit embeddings with captions drawn from `num_captions`.
inline Batch random_batch(std::mt19937_64& rng, int n, int dim, int num_captions) {
  Batch b;
  std::uniform_int_distribution<int> cap(0, num_captions - 1);
  for (int i = 0; i < n; ++i) {
    b.points.emplace_back();
    b.text.push_back(random_unit(rng, dim));
    b.image.push_back(random_unit(rng, dim));
    b.captions.push_back(static_cast<std::uint32_t>(cap(rng)));
  }
  return b;
}

}  // namespace clip2::testing

#endif  // CLIP2_TESTS_TEST_SUPPORT_H_
