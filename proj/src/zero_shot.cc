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
#include "clip2/zero_shot.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "clip2/binary_io.h"
#include "clip2/errors.h"

namespace clip2 {
namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  std::string field;
  while (std::getline(in, field, '\t')) out.push_back(field);
  return out;
}

double parse_double(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw FormatError(where + ": bad number '" + s + "'");
  }
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    out.push_back(line);
  }
  return out;
}

}  // namespace

std::vector<std::size_t> Prediction::top_k(std::size_t k) const {
  return {ranking.begin(), ranking.begin() + static_cast<std::ptrdiff_t>(std::min(k, ranking.size()))};
}

ClassBank build_class_bank(const std::vector<std::string>& names, const std::string& prompt_template,
                           const EmbeddingProvider& embeddings) {
  if (names.empty()) throw InvalidArgument("class bank: empty class list");
  apply_template(prompt_template, "");
  std::set<std::string> seen;
  for (const auto& n : names) {
    if (!seen.insert(n).second) throw InvalidArgument("duplicate class '" + n + "'");
  }
  ClassBank bank;
  bank.names = names;
  bank.features.resize(static_cast<Eigen::Index>(names.size()), embeddings.dim());
  for (std::size_t k = 0; k < names.size(); ++k) {
    const EmbeddingVector v = embeddings.embed_text(apply_template(prompt_template, names[k]));
    if (v.dim() != embeddings.dim()) throw InvalidArgument("class bank: provider returned wrong dimension");
    bank.features.row(static_cast<Eigen::Index>(k)) = v.normalized().values.transpose();
  }
  return bank;
}

Prediction make_prediction(Eigen::VectorXd probabilities) {
  Prediction p;
  p.probabilities = std::move(probabilities);
  p.ranking.resize(static_cast<std::size_t>(p.probabilities.size()));
  std::iota(p.ranking.begin(), p.ranking.end(), std::size_t{0});
  std::stable_sort(p.ranking.begin(), p.ranking.end(), [&](std::size_t a, std::size_t b) {
    return p.probabilities[static_cast<Eigen::Index>(a)] > p.probabilities[static_cast<Eigen::Index>(b)];
  });
  return p;
}

Prediction classify(const EmbeddingVector& point_feature, const ClassBank& bank) {
  if (point_feature.dim() != bank.features.cols()) throw InvalidArgument("classify: dimension mismatch");
  if (bank.size() == 0) throw InvalidArgument("classify: empty class bank");
  const Eigen::VectorXd scores = bank.features * point_feature.normalized().values;
  const Eigen::VectorXd shifted = (scores.array() - scores.maxCoeff()).exp().matrix();
  return make_prediction(shifted / shifted.sum());
}

Prediction ensemble(const std::vector<Eigen::VectorXd>& probability_vectors) {
  if (probability_vectors.empty()) throw InvalidArgument("ensemble: no inputs");
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(probability_vectors.front().size());
  for (const auto& v : probability_vectors) {
    if (v.size() != sum.size()) throw InvalidArgument("ensemble: class count mismatch");
    sum += v;
  }
  const double total = sum.sum();
  if (!(total > 0.0)) throw InvalidArgument("ensemble: inputs sum to zero");
  return make_prediction(sum / total);
}

std::string format_logits(const std::vector<InstanceLogits>& rows) {
  std::ostringstream out;
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& r : rows) {
    out << r.instance_id;
    for (Eigen::Index k = 0; k < r.probabilities.size(); ++k) out << '\t' << r.probabilities[k];
    out << '\n';
  }
  return out.str();
}

std::vector<InstanceLogits> parse_logits(const std::string& text) {
  std::vector<InstanceLogits> rows;
  int n = 0;
  for (const auto& line : lines_of(text)) {
    ++n;
    const auto fields = split_tabs(line);
    if (fields.size() < 2) throw FormatError("logit line " + std::to_string(n) + ": expected id and probabilities");
    InstanceLogits row;
    row.instance_id = fields[0];
    row.probabilities.resize(static_cast<Eigen::Index>(fields.size() - 1));
    for (std::size_t k = 1; k < fields.size(); ++k) {
      row.probabilities[static_cast<Eigen::Index>(k - 1)] = parse_double(fields[k], "logit line " + std::to_string(n));
    }
    if (!rows.empty() && rows.front().probabilities.size() != row.probabilities.size()) {
      throw FormatError("logit line " + std::to_string(n) + ": class count differs from first line");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<InstanceLogits> read_logits(const std::string& path) {
  try {
    return parse_logits(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

InstancePrediction to_instance_prediction(const std::string& instance_id, const Prediction& prediction,
                                          const std::vector<std::string>& names, std::size_t k) {
  InstancePrediction row;
  row.instance_id = instance_id;
  for (std::size_t idx : prediction.top_k(k)) {
    row.top.push_back({idx, names.at(idx), prediction.probabilities[static_cast<Eigen::Index>(idx)]});
  }
  return row;
}

std::string format_predictions(const std::vector<InstancePrediction>& rows) {
  std::ostringstream out;
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& r : rows) {
    out << r.instance_id;
    for (const auto& c : r.top) out << '\t' << c.class_index << '\t' << c.name << '\t' << c.probability;
    out << '\n';
  }
  return out.str();
}

std::vector<InstancePrediction> parse_predictions(const std::string& text) {
  std::vector<InstancePrediction> rows;
  int n = 0;
  for (const auto& line : lines_of(text)) {
    ++n;
    const std::string where = "predictions line " + std::to_string(n);
    const auto fields = split_tabs(line);
    if (fields.size() < 4 || (fields.size() - 1) % 3 != 0) throw FormatError(where + ": expected id and triples");
    InstancePrediction row;
    row.instance_id = fields[0];
    for (std::size_t f = 1; f < fields.size(); f += 3) {
      const double idx = parse_double(fields[f], where);
      if (idx < 0 || idx != std::floor(idx)) throw FormatError(where + ": bad class index");
      row.top.push_back({static_cast<std::size_t>(idx), fields[f + 1], parse_double(fields[f + 2], where)});
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<InstancePrediction> read_predictions(const std::string& path) {
  try {
    return parse_predictions(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

std::vector<std::string> read_class_names(const std::string& path) {
  std::vector<std::string> names;
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    names.push_back(line);
  }
  return names;
}

}  // namespace clip2
