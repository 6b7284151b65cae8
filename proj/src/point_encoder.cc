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
#include "clip2/point_encoder.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>

#include "clip2/binary_io.h"
#include "clip2/errors.h"

namespace clip2 {
namespace {

std::atomic<std::uint64_t> g_generation{1};

std::array<std::pair<int, int>, kEncoderLayers> layer_shapes(const EncoderConfig& c) {
  return {{{c.hidden1, 3}, {c.hidden2, c.hidden1}, {c.hidden3, c.hidden2}, {c.embed_dim, c.hidden3}}};
}

Eigen::MatrixXd relu(const Eigen::MatrixXd& x) { return x.cwiseMax(0.0); }

Eigen::MatrixXd relu_mask(const Eigen::MatrixXd& pre) {
  return (pre.array() > 0.0).cast<double>().matrix();
}

}  // namespace

void EncoderConfig::validate() const {
  if (hidden1 <= 0 || hidden2 <= 0 || hidden3 <= 0 || embed_dim <= 0) {
    throw InvalidArgument("encoder layer sizes must be positive");
  }
  if (num_points <= 0) throw InvalidArgument("encoder num_points must be positive");
}

EncoderTensors EncoderTensors::zeros(const EncoderConfig& config) {
  config.validate();
  EncoderTensors t;
  const auto shapes = layer_shapes(config);
  for (std::size_t i = 0; i < kEncoderLayers; ++i) {
    t.layers[i].weight = Eigen::MatrixXd::Zero(shapes[i].first, shapes[i].second);
    t.layers[i].bias = Eigen::VectorXd::Zero(shapes[i].first);
  }
  return t;
}

std::vector<std::span<double>> EncoderTensors::views() {
  std::vector<std::span<double>> out;
  for (auto& l : layers) {
    out.emplace_back(l.weight.data(), static_cast<std::size_t>(l.weight.size()));
    out.emplace_back(l.bias.data(), static_cast<std::size_t>(l.bias.size()));
  }
  return out;
}

std::vector<std::span<const double>> EncoderTensors::views() const {
  std::vector<std::span<const double>> out;
  for (const auto& l : layers) {
    out.emplace_back(l.weight.data(), static_cast<std::size_t>(l.weight.size()));
    out.emplace_back(l.bias.data(), static_cast<std::size_t>(l.bias.size()));
  }
  return out;
}

std::size_t EncoderTensors::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

void EncoderParams::mark_modified() { generation = g_generation.fetch_add(1); }

EncoderParams init_params(std::uint64_t seed, const EncoderConfig& config) {
  EncoderParams params;
  params.config = config;
  params.tensors = EncoderTensors::zeros(config);
  std::mt19937_64 rng(seed);
  for (auto& layer : params.tensors.layers) {
    const double limit = std::sqrt(6.0 / static_cast<double>(layer.weight.rows() + layer.weight.cols()));
    std::uniform_real_distribution<double> dist(-limit, limit);
    // Column-major storage order is the draw order.
    for (Eigen::Index i = 0; i < layer.weight.size(); ++i) layer.weight.data()[i] = dist(rng);
  }
  params.mark_modified();
  return params;
}

PointCloud sample_points(const PointCloud& proxy, int n, std::uint64_t seed) {
  if (proxy.empty()) throw InvalidArgument("sample_points: empty proxy");
  if (n <= 0) throw InvalidArgument("sample_points: n must be positive");
  const std::size_t count = static_cast<std::size_t>(n);
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> picks;
  picks.reserve(count);
  if (proxy.size() < count) {
    std::uniform_int_distribution<std::size_t> dist(0, proxy.size() - 1);
    for (std::size_t i = 0; i < count; ++i) picks.push_back(dist(rng));
  } else {
    // Partial Fisher-Yates.
    std::vector<std::size_t> pool(proxy.size());
    for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
    for (std::size_t i = 0; i < count; ++i) {
      std::uniform_int_distribution<std::size_t> dist(i, pool.size() - 1);
      std::swap(pool[i], pool[dist(rng)]);
    }
    picks.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(count));
  }
  PointCloud out = subset(proxy, picks);
  const Point3 center = centroid(out);
  double radius = 0.0;
  for (auto& p : out.points) {
    p -= center;
    radius = std::max(radius, p.norm());
  }
  if (radius > 0.0) {
    for (auto& p : out.points) p /= radius;
  }
  return out;
}

EncodeResult forward(const EncoderParams& params, const PointCloud& sampled) {
  const EncoderConfig& cfg = params.config;
  if (sampled.size() != static_cast<std::size_t>(cfg.num_points)) {
    throw InvalidArgument("encoder forward: expected " + std::to_string(cfg.num_points) + " points, got " +
                          std::to_string(sampled.size()));
  }
  const auto& L = params.tensors.layers;
  EncodeResult result;
  ForwardCache& c = result.cache;
  c.generation = params.generation;
  c.config = cfg;
  c.input.resize(3, cfg.num_points);
  for (int j = 0; j < cfg.num_points; ++j) c.input.col(j) = sampled.points[static_cast<std::size_t>(j)];

  c.pre1 = (L[0].weight * c.input).colwise() + L[0].bias;
  c.pre2 = (L[1].weight * relu(c.pre1)).colwise() + L[1].bias;
  c.pooled.resize(cfg.hidden2);
  c.argmax.resize(static_cast<std::size_t>(cfg.hidden2));
  for (int ch = 0; ch < cfg.hidden2; ++ch) {
    Eigen::Index best = 0;
    double best_value = std::max(c.pre2(ch, 0), 0.0);
    for (Eigen::Index j = 1; j < c.pre2.cols(); ++j) {
      const double v = std::max(c.pre2(ch, j), 0.0);
      if (v > best_value) {
        best_value = v;
        best = j;
      }
    }
    c.pooled[ch] = best_value;
    c.argmax[static_cast<std::size_t>(ch)] = best;
  }
  c.pre3 = L[2].weight * c.pooled + L[2].bias;
  c.output = L[3].weight * c.pre3.cwiseMax(0.0) + L[3].bias;
  c.norm = c.output.norm();
  if (!(c.norm > 0.0) || !std::isfinite(c.norm)) throw NumericalError("degenerate embedding");
  result.embedding = EmbeddingVector(c.output / c.norm);
  return result;
}

void backward_accumulate(const EncoderParams& params, const ForwardCache& cache, const EmbeddingVector& grad_embedding,
                         EncoderGradients& grads) {
  if (cache.generation != params.generation || !(cache.config == params.config)) {
    throw InvalidArgument("encoder backward: stale cache (parameters changed since forward)");
  }
  const EncoderConfig& cfg = params.config;
  if (grad_embedding.dim() != cfg.embed_dim) throw InvalidArgument("encoder backward: gradient dimension mismatch");
  const auto& L = params.tensors.layers;
  auto& G = grads.layers;

  // Through f = y / |y|.
  const Eigen::VectorXd f = cache.output / cache.norm;
  const Eigen::VectorXd& g = grad_embedding.values;
  const Eigen::VectorXd d_out = (g - f * f.dot(g)) / cache.norm;

  const Eigen::VectorXd hidden3 = cache.pre3.cwiseMax(0.0);
  G[3].weight.noalias() += d_out * hidden3.transpose();
  G[3].bias += d_out;
  const Eigen::VectorXd d_pre3 = (L[3].weight.transpose() * d_out).cwiseProduct(relu_mask(cache.pre3));
  G[2].weight.noalias() += d_pre3 * cache.pooled.transpose();
  G[2].bias += d_pre3;
  const Eigen::VectorXd d_pooled = L[2].weight.transpose() * d_pre3;

  // Max-pool routes each channel to its argmax point; only those points
  // carry gradient into the per-point MLP.
  std::vector<Eigen::Index> active(cache.argmax.begin(), cache.argmax.end());
  std::sort(active.begin(), active.end());
  active.erase(std::unique(active.begin(), active.end()), active.end());
  const auto n_active = static_cast<Eigen::Index>(active.size());
  Eigen::MatrixXd d_pre2 = Eigen::MatrixXd::Zero(cfg.hidden2, n_active);
  for (int ch = 0; ch < cfg.hidden2; ++ch) {
    const Eigen::Index point = cache.argmax[static_cast<std::size_t>(ch)];
    if (cache.pre2(ch, point) <= 0.0) continue;
    const auto col = std::lower_bound(active.begin(), active.end(), point) - active.begin();
    d_pre2(ch, col) += d_pooled[ch];
  }
  Eigen::MatrixXd pre1_active(cfg.hidden1, n_active);
  Eigen::Matrix3Xd input_active(3, n_active);
  for (Eigen::Index k = 0; k < n_active; ++k) {
    pre1_active.col(k) = cache.pre1.col(active[static_cast<std::size_t>(k)]);
    input_active.col(k) = cache.input.col(active[static_cast<std::size_t>(k)]);
  }
  G[1].weight.noalias() += d_pre2 * relu(pre1_active).transpose();
  G[1].bias += d_pre2.rowwise().sum();
  const Eigen::MatrixXd d_pre1 = (L[1].weight.transpose() * d_pre2).cwiseProduct(relu_mask(pre1_active));
  G[0].weight.noalias() += d_pre1 * input_active.transpose();
  G[0].bias += d_pre1.rowwise().sum();
}

EncoderGradients backward(const EncoderParams& params, const ForwardCache& cache, const EmbeddingVector& grad_embedding) {
  EncoderGradients grads = EncoderTensors::zeros(params.config);
  backward_accumulate(params, cache, grad_embedding, grads);
  return grads;
}

std::string encode_checkpoint(const EncoderParams& params) {
  const EncoderConfig& c = params.config;
  ByteWriter w;
  w.magic("ENC1");
  for (int v : {c.hidden1, c.hidden2, c.hidden3, c.embed_dim, c.num_points}) w.u32(static_cast<std::uint32_t>(v));
  for (const auto& view : params.tensors.views()) {
    for (double v : view) w.f32(static_cast<float>(v));
  }
  return w.bytes();
}

EncoderParams decode_checkpoint(const std::string& bytes) {
  ByteReader r(bytes, "ENC1");
  r.expect_magic("ENC1");
  EncoderParams params;
  EncoderConfig& c = params.config;
  for (int* field : {&c.hidden1, &c.hidden2, &c.hidden3, &c.embed_dim, &c.num_points}) {
    const std::uint32_t v = r.u32();
    if (v == 0 || v > (1u << 24)) throw FormatError("ENC1: bad layer size");
    *field = static_cast<int>(v);
  }
  params.tensors = EncoderTensors::zeros(c);
  r.require(static_cast<std::uint64_t>(params.tensors.parameter_count()) * 4);
  for (auto view : params.tensors.views()) {
    for (double& v : view) v = r.f32();
  }
  r.expect_end();
  params.mark_modified();
  return params;
}

void write_checkpoint(const EncoderParams& params, const std::string& path) {
  write_file(path, encode_checkpoint(params));
}

EncoderParams read_checkpoint(const std::string& path) {
  try {
    return decode_checkpoint(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

}  // namespace clip2
