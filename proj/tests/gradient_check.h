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
#ifndef CLIP2_TESTS_GRADIENT_CHECK_H_
#define CLIP2_TESTS_GRADIENT_CHECK_H_

#include <algorithm>
#include <cstdint>
#include <vector>

#include "clip2/contrastive.h"
#include "clip2/fixture.h"
#include "clip2/point_encoder.h"
#include "clip2/proxy_collection.h"
#include "oracles.h"

namespace clip2::testing {

struct GradientCheckResult {
  std::size_t parameters = 0;
  double max_relative_error = 0.0;
  double max_abs_gradient = 0.0;
};

// Four collected proxies (distinct fixture objects, two captions shared)
// sampled to `points` points each, with synthetic text/image features.
inline Batch fixture_batch(int points, int dim, std::uint64_t seed) {
  FixtureSpec spec;
  spec.objects_per_class = 4;
  spec.embed_dim = dim;
  spec.distractors_per_scene = 0;
  spec.seed = seed;
  const Fixture fx = generate_fixture(spec);
  const SyntheticEmbeddings emb(dim, seed, spec.class_names);
  std::vector<TripletRecord> records;
  for (const FixtureScene& scene : fx.splits.front().scenes) {
    CollectionResult r = collect_indoor(scene.scene_id, scene.depth, scene.calib, scene.detections, emb);
    for (auto& rec : r.records) records.push_back(std::move(rec));
  }
  // Captions 0, 1, 2, 0 so both masked and unmasked negatives occur.
  const std::uint32_t wanted[] = {0, 1, 2, 0};
  Batch batch;
  std::vector<bool> used(records.size(), false);
  for (std::uint32_t caption : wanted) {
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (used[i] || records[i].caption_index != caption) continue;
      used[i] = true;
      batch.points.push_back(sample_points(records[i].point_proxy, points, seed + i));
      batch.text.push_back(emb.anchor(caption));
      batch.image.push_back(emb.image_for_class(caption, records[i].instance_id));
      batch.captions.push_back(caption);
      break;
    }
  }
  return batch;
}

// Central differences of the full combined loss against every parameter.
inline GradientCheckResult check_encoder_gradient(const EncoderConfig& enc, const Batch& batch, const TrainingConfig& cfg,
                                                  std::uint64_t init_seed, double step = 1e-4) {
  EncoderParams params = init_params(init_seed, enc);
  const StepResult analytic = loss_and_gradients(params, batch, cfg);
  const auto grads = analytic.grads.views();
  GradientCheckResult out;
  auto views = params.tensors.views();
  for (std::size_t t = 0; t < views.size(); ++t) {
    for (std::size_t k = 0; k < views[t].size(); ++k) {
      const double saved = views[t][k];
      views[t][k] = saved + step;
      params.mark_modified();
      const double up = loss_and_gradients(params, batch, cfg).loss;
      views[t][k] = saved - step;
      params.mark_modified();
      const double down = loss_and_gradients(params, batch, cfg).loss;
      views[t][k] = saved;
      params.mark_modified();
      const double numeric = (up - down) / (2.0 * step);
      out.max_relative_error = std::max(out.max_relative_error, oracle::relative_error(grads[t][k], numeric));
      out.max_abs_gradient = std::max(out.max_abs_gradient, std::abs(grads[t][k]));
      ++out.parameters;
    }
  }
  return out;
}

}  // namespace clip2::testing

#endif  // CLIP2_TESTS_GRADIENT_CHECK_H_
