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
#ifndef CLIP2_EVALUATION_H_
#define CLIP2_EVALUATION_H_

#include <optional>
#include <string>
#include <vector>

#include "clip2/geometry.h"
#include "clip2/zero_shot.h"

namespace clip2 {

struct LabeledInstance {
  std::string instance_id;
  std::size_t true_class = 0;
  std::optional<Point3> center;  // ground-truth box centre
};

struct ClassAccuracy {
  std::size_t class_index = 0;
  std::string name;
  std::size_t instances = 0;
  double top1 = 0.0;
  double top5 = 0.0;
};

struct LocalizationResult {
  double threshold = 2.0;
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;
  // Absent when the ratio is 0/0.
  std::optional<double> precision;
  std::optional<double> recall;
};

struct EvalReport {
  std::vector<ClassAccuracy> classes;  // only classes with >= 1 evaluated instance
  double average_top1 = 0.0;           // unweighted over `classes`
  double average_top5 = 0.0;
  std::size_t instances = 0;
  std::size_t unpredicted = 0;  // labels without a prediction, not scored
  std::optional<LocalizationResult> localization;

  std::string format() const;
};

// Per-class top-1 / top-5 over predicted instances; class names come from
// `class_names` when given. Throws InvalidArgument for a prediction whose
// instance has no label.
EvalReport recognition_report(const std::vector<InstancePrediction>& predictions,
                              const std::vector<LabeledInstance>& labels,
                              const std::vector<std::string>& class_names = {});

struct LocatedProxy {
  Point3 center;
  std::size_t predicted_class = 0;
};

// Greedy one-to-one matching of same-class (ground truth, proxy) pairs with
// centre distance strictly below `threshold`, nearest pairs first (ties by
// lower proxy index, then lower ground-truth index). Ground truths without a
// centre are ignored.
LocalizationResult localization_pr(const std::vector<LocatedProxy>& proxies, const std::vector<LabeledInstance>& gts,
                                   double threshold = 2.0);

// "instance_id<TAB>class_index[<TAB>cx<TAB>cy<TAB>cz]" per line.
std::string format_labels(const std::vector<LabeledInstance>& labels);
std::vector<LabeledInstance> parse_labels(const std::string& text);
std::vector<LabeledInstance> read_labels(const std::string& path);

}  // namespace clip2

#endif  // CLIP2_EVALUATION_H_
