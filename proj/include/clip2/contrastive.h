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
#ifndef CLIP2_CONTRASTIVE_H_
#define CLIP2_CONTRASTIVE_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "clip2/embedding.h"
#include "clip2/point_encoder.h"
#include "clip2/proxy_collection.h"

namespace clip2 {

struct TrainingConfig {
  int batch_size = 32;
  double temperature = 0.07;
  double lambda1 = 0.5;  // text-point term
  double lambda2 = 0.5;  // image-point term
  double learning_rate = 0.006;
  double weight_decay = 3e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::int64_t warmup_iters = 1000;
  std::int64_t total_epochs = 100;
  // When positive, overrides the epoch-derived step count.
  std::int64_t max_steps = 0;
  std::uint64_t seed = 0;
  double balance_threshold = 0.01;
  std::string prompt_template = "point cloud of a {}.";

  void validate() const;
};

// One mini-batch. Text and image embeddings are unit norm.
struct Batch {
  std::vector<PointCloud> points;  // sampled and normalized
  std::vector<EmbeddingVector> text;
  std::vector<EmbeddingVector> image;
  std::vector<std::uint32_t> captions;

  std::size_t size() const { return captions.size(); }
  void validate() const;
};

struct LossResult {
  double value = 0.0;
  std::vector<EmbeddingVector> grad;  // d loss / d f^P_j
  // Every sample shares one caption, so no row has a negative.
  bool degenerate = false;
};

// Semantic-level term: anchors f^T_i, negatives restricted to samples whose
// caption differs from sample i's.
LossResult loss_text_point(const Batch& batch, const std::vector<EmbeddingVector>& point_features, double temperature);

// Instance-level term: anchors f^I_i, every other sample is a negative.
LossResult loss_image_point(const Batch& batch, const std::vector<EmbeddingVector>& point_features, double temperature);

// lambda1 * text-point + lambda2 * image-point.
LossResult loss_combined(const Batch& batch, const std::vector<EmbeddingVector>& point_features,
                         const TrainingConfig& config);

struct StepResult {
  double loss = 0.0;
  EncoderGradients grads;
  bool degenerate = false;
};

// Encodes every sample, evaluates the combined loss and backpropagates it
// into the encoder parameters.
StepResult loss_and_gradients(const EncoderParams& params, const Batch& batch, const TrainingConfig& config);

// Linear warmup from 0 to the base rate over warmup_iters, then cosine decay
// reaching 0 at step total_steps - 1.
double learning_rate_at(std::int64_t step, std::int64_t total_steps, const TrainingConfig& config);

// Adam moments with decoupled weight decay.
class AdamW {
 public:
  AdamW(const EncoderConfig& shape, const TrainingConfig& config);
  void step(EncoderParams& params, const EncoderGradients& grads, double learning_rate);
  std::int64_t steps_taken() const { return t_; }

 private:
  double beta1_, beta2_, epsilon_, weight_decay_;
  EncoderTensors m_, v_;
  std::int64_t t_ = 0;
};

struct StepLog {
  std::int64_t step = 0;
  double learning_rate = 0.0;
  double loss = 0.0;
};

struct TrainingReport {
  std::vector<StepLog> steps;
  std::vector<double> epoch_mean_loss;
  std::int64_t steps_per_epoch = 0;
  std::uint64_t checkpoint_digest = 0;  // FNV-1a of the ENC1 bytes
  EncoderParams params;

  std::string format() const;
};

using ProgressCallback = std::function<void(const StepLog&)>;

// Balanced-sampled contrastive pretraining. Deterministic for a given
// dataset, configs, seed, and initial parameters.
TrainingReport train(const std::vector<TripletRecord>& records, const VocabularyList& vocabulary,
                     const EmbeddingProvider& embeddings, const TrainingConfig& config,
                     const EncoderConfig& encoder_config, std::optional<EncoderParams> initial = std::nullopt,
                     const ProgressCallback& progress = {});

// Mixes (seed, a, b) into a 64-bit stream seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

}  // namespace clip2

#endif  // CLIP2_CONTRASTIVE_H_
