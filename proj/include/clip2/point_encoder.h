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
#ifndef CLIP2_POINT_ENCODER_H_
#define CLIP2_POINT_ENCODER_H_

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "clip2/embedding.h"
#include "clip2/geometry.h"

namespace clip2 {

struct EncoderConfig {
  int hidden1 = 64;    // per-point MLP, first layer
  int hidden2 = 128;   // per-point MLP, second layer (pooled width)
  int hidden3 = 128;   // projection head hidden layer
  int embed_dim = 64;  // joint embedding dimension C
  int num_points = 2048;

  void validate() const;
  bool operator==(const EncoderConfig&) const = default;
};

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
};

// Layer order: point MLP (3 -> h1, h1 -> h2), head (h2 -> h3, h3 -> C).
inline constexpr std::size_t kEncoderLayers = 4;

struct EncoderTensors {
  std::array<DenseLayer, kEncoderLayers> layers;

  static EncoderTensors zeros(const EncoderConfig& config);
  // Every weight and bias as a flat view, in checkpoint order.
  std::vector<std::span<double>> views();
  std::vector<std::span<const double>> views() const;
  std::size_t parameter_count() const;
};

struct EncoderParams {
  EncoderConfig config;
  EncoderTensors tensors;
  // Changes whenever the weights are modified through mark_modified();
  // forward caches remember it so backward can reject stale caches.
  std::uint64_t generation = 0;

  void mark_modified();
};

using EncoderGradients = EncoderTensors;

// Activations kept by forward() for the matching backward().
struct ForwardCache {
  std::uint64_t generation = 0;
  EncoderConfig config;
  Eigen::Matrix3Xd input;
  Eigen::MatrixXd pre1;  // h1 x n
  Eigen::MatrixXd pre2;  // h2 x n
  std::vector<Eigen::Index> argmax;  // h2, lowest index on ties
  Eigen::VectorXd pooled;  // h2
  Eigen::VectorXd pre3;    // h3
  Eigen::VectorXd output;  // C, before normalization
  double norm = 0.0;
};

struct EncodeResult {
  EmbeddingVector embedding;  // unit norm
  ForwardCache cache;
};

// Glorot-uniform weights, zero biases.
EncoderParams init_params(std::uint64_t seed, const EncoderConfig& config);

// Draws n points (with replacement only when the proxy has fewer than n),
// then centers them on their centroid and scales them into the unit ball.
PointCloud sample_points(const PointCloud& proxy, int n, std::uint64_t seed);

EncodeResult forward(const EncoderParams& params, const PointCloud& sampled);

EncoderGradients backward(const EncoderParams& params, const ForwardCache& cache, const EmbeddingVector& grad_embedding);

// Accumulates `backward` into an existing gradient buffer.
void backward_accumulate(const EncoderParams& params, const ForwardCache& cache, const EmbeddingVector& grad_embedding,
                         EncoderGradients& grads);

// "ENC1" | u32 h1, h2, h3, C, num_points | tensors in view() order as f32.
std::string encode_checkpoint(const EncoderParams& params);
EncoderParams decode_checkpoint(const std::string& bytes);
void write_checkpoint(const EncoderParams& params, const std::string& path);
EncoderParams read_checkpoint(const std::string& path);

}  // namespace clip2

#endif  // CLIP2_POINT_ENCODER_H_
