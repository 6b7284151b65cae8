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
#include "clip2/contrastive.h"

#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>

#include "clip2/errors.h"

namespace clip2 {

void TrainingConfig::validate() const {
  if (batch_size < 2) throw ConfigError("batch size must be >= 2");
  if (!(temperature > 0.0) || !std::isfinite(temperature)) throw ConfigError("temperature must be > 0");
  if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0)) throw ConfigError("loss weights must be >= 0");
  if (!(learning_rate >= 0.0)) throw ConfigError("learning rate must be >= 0");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight decay must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("adam betas must be in [0, 1)");
  if (!(adam_epsilon > 0.0)) throw ConfigError("adam epsilon must be > 0");
  if (warmup_iters < 0) throw ConfigError("warmup iterations must be >= 0");
  if (total_epochs < 1 && max_steps <= 0) throw ConfigError("need total_epochs >= 1 or max_steps > 0");
  if (max_steps < 0) throw ConfigError("max steps must be >= 0");
  if (!(balance_threshold >= 0.0)) throw ConfigError("balance threshold must be >= 0");
  try {
    apply_template(prompt_template, "x");
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
}

void Batch::validate() const {
  const std::size_t n = captions.size();
  if (points.size() != n || text.size() != n || image.size() != n) throw InvalidArgument("batch: misaligned lengths");
  if (n < 2) throw InvalidArgument("batch: need at least 2 samples");
}

namespace {

// Shared InfoNCE kernel: row i contrasts anchor a_i against f^P_i and the
// point features of every j with include(i, j).
template <typename Include>
LossResult info_nce(const std::vector<EmbeddingVector>& anchors, const std::vector<EmbeddingVector>& points,
                    double temperature, Include include) {
  const std::size_t n = anchors.size();
  if (points.size() != n) throw InvalidArgument("contrastive loss: feature count does not match batch");
  if (!(temperature > 0.0)) throw InvalidArgument("contrastive loss: temperature must be > 0");
  const int dim = anchors.front().dim();
  for (std::size_t i = 0; i < n; ++i) {
    if (anchors[i].dim() != dim || points[i].dim() != dim) throw InvalidArgument("contrastive loss: dimension mismatch");
  }
  LossResult out;
  out.grad.assign(n, EmbeddingVector(Eigen::VectorXd::Zero(dim)));
  out.degenerate = true;
  std::vector<double> logits(n);
  std::vector<char> member(n);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      member[j] = (j == i) || include(i, j);
      if (!member[j]) continue;
      if (j != i) out.degenerate = false;
      logits[j] = anchors[i].values.dot(points[j].values) / temperature;
      peak = std::max(peak, logits[j]);
    }
    double denom = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (member[j]) denom += std::exp(logits[j] - peak);
    }
    const double log_denom = peak + std::log(denom);
    out.value += (log_denom - logits[i]) * inv_n;
    for (std::size_t j = 0; j < n; ++j) {
      if (!member[j]) continue;
      const double p = std::exp(logits[j] - log_denom);
      const double coeff = (p - (j == i ? 1.0 : 0.0)) * inv_n / temperature;
      out.grad[j].values += coeff * anchors[i].values;
    }
  }
  return out;
}

}  // namespace

LossResult loss_text_point(const Batch& batch, const std::vector<EmbeddingVector>& point_features, double temperature) {
  batch.validate();
  const auto& captions = batch.captions;
  return info_nce(batch.text, point_features, temperature,
                  [&](std::size_t i, std::size_t j) { return captions[j] != captions[i]; });
}

LossResult loss_image_point(const Batch& batch, const std::vector<EmbeddingVector>& point_features, double temperature) {
  batch.validate();
  return info_nce(batch.image, point_features, temperature, [](std::size_t i, std::size_t j) { return j != i; });
}

LossResult loss_combined(const Batch& batch, const std::vector<EmbeddingVector>& point_features,
                         const TrainingConfig& config) {
  const LossResult tp = loss_text_point(batch, point_features, config.temperature);
  const LossResult ip = loss_image_point(batch, point_features, config.temperature);
  LossResult out;
  out.value = config.lambda1 * tp.value + config.lambda2 * ip.value;
  out.degenerate = tp.degenerate;
  out.grad.reserve(tp.grad.size());
  for (std::size_t j = 0; j < tp.grad.size(); ++j) {
    out.grad.emplace_back(config.lambda1 * tp.grad[j].values + config.lambda2 * ip.grad[j].values);
  }
  return out;
}

StepResult loss_and_gradients(const EncoderParams& params, const Batch& batch, const TrainingConfig& config) {
  batch.validate();
  std::vector<EncodeResult> encoded;
  encoded.reserve(batch.size());
  std::vector<EmbeddingVector> features;
  features.reserve(batch.size());
  for (const auto& pts : batch.points) {
    encoded.push_back(forward(params, pts));
    features.push_back(encoded.back().embedding);
  }
  const LossResult loss = loss_combined(batch, features, config);
  StepResult out;
  out.loss = loss.value;
  out.degenerate = loss.degenerate;
  out.grads = EncoderTensors::zeros(params.config);
  for (std::size_t j = 0; j < batch.size(); ++j) backward_accumulate(params, encoded[j].cache, loss.grad[j], out.grads);
  return out;
}

double learning_rate_at(std::int64_t step, std::int64_t total_steps, const TrainingConfig& config) {
  const double base = config.learning_rate;
  const std::int64_t warmup = config.warmup_iters;
  if (step < warmup) return base * static_cast<double>(step) / static_cast<double>(warmup);
  const std::int64_t decay_span = total_steps - 1 - warmup;
  if (decay_span <= 0) return base;
  const double progress = std::min(1.0, static_cast<double>(step - warmup) / static_cast<double>(decay_span));
  return base * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

AdamW::AdamW(const EncoderConfig& shape, const TrainingConfig& config)
    : beta1_(config.beta1), beta2_(config.beta2), epsilon_(config.adam_epsilon), weight_decay_(config.weight_decay),
      m_(EncoderTensors::zeros(shape)), v_(EncoderTensors::zeros(shape)) {}

void AdamW::step(EncoderParams& params, const EncoderGradients& grads, double learning_rate) {
  ++t_;
  const double correction1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double correction2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  auto theta = params.tensors.views();
  const auto g = grads.views();
  auto m = m_.views();
  auto v = v_.views();
  if (theta.size() != g.size()) throw InvalidArgument("adamw: gradient shape mismatch");
  for (std::size_t k = 0; k < theta.size(); ++k) {
    if (theta[k].size() != g[k].size()) throw InvalidArgument("adamw: gradient shape mismatch");
    for (std::size_t i = 0; i < theta[k].size(); ++i) {
      m[k][i] = beta1_ * m[k][i] + (1.0 - beta1_) * g[k][i];
      v[k][i] = beta2_ * v[k][i] + (1.0 - beta2_) * g[k][i] * g[k][i];
      const double m_hat = m[k][i] / correction1;
      const double v_hat = v[k][i] / correction2;
      theta[k][i] -= learning_rate * weight_decay_ * theta[k][i];
      theta[k][i] -= learning_rate * m_hat / (std::sqrt(v_hat) + epsilon_);
    }
  }
  params.mark_modified();
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  // splitmix64 finalizer over a simple combination.
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (a + 1) + 0xbf58476d1ce4e5b9ull * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

std::string TrainingReport::format() const {
  std::ostringstream out;
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "# step\tlr\tloss\n";
  for (const auto& s : steps) out << s.step << '\t' << s.learning_rate << '\t' << s.loss << '\n';
  out << "# epoch\tmean_loss\n";
  for (std::size_t e = 0; e < epoch_mean_loss.size(); ++e) out << "epoch\t" << e << '\t' << epoch_mean_loss[e] << '\n';
  out << "steps_per_epoch\t" << steps_per_epoch << '\n';
  out << "checkpoint_digest\t" << std::hex << std::setw(16) << std::setfill('0') << checkpoint_digest << '\n';
  return out.str();
}

TrainingReport train(const std::vector<TripletRecord>& records, const VocabularyList& vocabulary,
                     const EmbeddingProvider& embeddings, const TrainingConfig& config,
                     const EncoderConfig& encoder_config, std::optional<EncoderParams> initial,
                     const ProgressCallback& progress) {
  config.validate();
  encoder_config.validate();
  if (records.empty()) throw ConfigError("training dataset is empty");
  if (embeddings.dim() != encoder_config.embed_dim) {
    throw ConfigError("embedding dimension " + std::to_string(embeddings.dim()) + " does not match encoder output " +
                      std::to_string(encoder_config.embed_dim));
  }

  std::vector<std::optional<EmbeddingVector>> text_cache(vocabulary.size());
  auto text_for = [&](std::uint32_t caption) -> const EmbeddingVector& {
    if (caption >= vocabulary.size()) throw ConfigError("record caption index outside vocabulary");
    auto& slot = text_cache[caption];
    if (!slot) slot = embeddings.embed_text(apply_template(config.prompt_template, vocabulary[caption])).normalized();
    return *slot;
  };

  TrainingReport report;
  if (initial) {
    if (!(initial->config == encoder_config)) throw ConfigError("initial checkpoint does not match encoder config");
    report.params = std::move(*initial);
  } else {
    report.params = init_params(mix_seed(config.seed, 0x1417), encoder_config);
  }
  EncoderParams& params = report.params;

  BalancedSampler sampler(records, mix_seed(config.seed, 0x5a3), config.balance_threshold);
  const auto batch = static_cast<std::size_t>(config.batch_size);
  report.steps_per_epoch = static_cast<std::int64_t>((sampler.epoch_length() + batch - 1) / batch);
  const std::int64_t total_steps =
      config.max_steps > 0 ? config.max_steps : config.total_epochs * report.steps_per_epoch;

  AdamW optimizer(encoder_config, config);
  double epoch_sum = 0.0;
  std::int64_t epoch_count = 0;
  for (std::int64_t step = 0; step < total_steps; ++step) {
    Batch b;
    for (std::size_t slot = 0; slot < batch; ++slot) {
      const TripletRecord& rec = records[sampler.next()];
      b.points.push_back(sample_points(rec.point_proxy, encoder_config.num_points,
                                       mix_seed(config.seed, static_cast<std::uint64_t>(step), slot)));
      b.text.push_back(text_for(rec.caption_index));
      b.image.push_back(rec.image_embedding.normalized());
      b.captions.push_back(rec.caption_index);
    }
    StepResult result = loss_and_gradients(params, b, config);
    if (!std::isfinite(result.loss)) {
      throw NumericalError("non-finite loss at step " + std::to_string(step), step);
    }
    const double lr = learning_rate_at(step, total_steps, config);
    optimizer.step(params, result.grads, lr);

    const StepLog log{step, lr, result.loss};
    report.steps.push_back(log);
    if (progress) progress(log);
    epoch_sum += result.loss;
    ++epoch_count;
    if (epoch_count == report.steps_per_epoch || step + 1 == total_steps) {
      report.epoch_mean_loss.push_back(epoch_sum / static_cast<double>(epoch_count));
      epoch_sum = 0.0;
      epoch_count = 0;
    }
  }
  report.checkpoint_digest = fnv1a64(encode_checkpoint(params));
  return report;
}

}  // namespace clip2
