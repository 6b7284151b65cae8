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
#ifndef CLIP2_ZERO_SHOT_H_
#define CLIP2_ZERO_SHOT_H_

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "clip2/embedding.h"

namespace clip2 {

inline constexpr const char* kDefaultPromptTemplate = "point cloud of a {}.";

// K x C matrix of unit-norm prompt embeddings.
struct ClassBank {
  std::vector<std::string> names;
  Eigen::MatrixXd features;

  std::size_t size() const { return names.size(); }
};

struct Prediction {
  Eigen::VectorXd probabilities;   // K, sums to 1
  std::vector<std::size_t> ranking;  // all K indices, descending probability, ties by lower index

  std::size_t top1() const { return ranking.front(); }
  std::vector<std::size_t> top_k(std::size_t k) const;
};

ClassBank build_class_bank(const std::vector<std::string>& names, const std::string& prompt_template,
                           const EmbeddingProvider& embeddings);

// softmax(f^P . F_K^T) on raw inner products; f^P is re-normalized first.
Prediction classify(const EmbeddingVector& point_feature, const ClassBank& bank);

// Builds a Prediction (ranking included) from a probability vector.
Prediction make_prediction(Eigen::VectorXd probabilities);

// Elementwise sum of the probability vectors, renormalized.
Prediction ensemble(const std::vector<Eigen::VectorXd>& probability_vectors);

// Logit file: one line per instance, "instance_id p_1 ... p_K" (tab separated).
struct InstanceLogits {
  std::string instance_id;
  Eigen::VectorXd probabilities;
};
std::string format_logits(const std::vector<InstanceLogits>& rows);
std::vector<InstanceLogits> parse_logits(const std::string& text);
std::vector<InstanceLogits> read_logits(const std::string& path);

// Classification output: "instance_id" then up to five
// "class_index<TAB>class_name<TAB>probability" triples, tab separated.
struct RankedClass {
  std::size_t class_index = 0;
  std::string name;
  double probability = 0.0;
};
struct InstancePrediction {
  std::string instance_id;
  std::vector<RankedClass> top;
};
InstancePrediction to_instance_prediction(const std::string& instance_id, const Prediction& prediction,
                                          const std::vector<std::string>& names, std::size_t k = 5);
std::string format_predictions(const std::vector<InstancePrediction>& rows);
std::vector<InstancePrediction> parse_predictions(const std::string& text);
std::vector<InstancePrediction> read_predictions(const std::string& path);

// One class name per line, blank lines skipped.
std::vector<std::string> read_class_names(const std::string& path);

}  // namespace clip2

#endif  // CLIP2_ZERO_SHOT_H_
