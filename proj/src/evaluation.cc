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
#include "clip2/evaluation.h"

#include <algorithm>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <tuple>
#include <unordered_map>

#include "clip2/binary_io.h"
#include "clip2/errors.h"

namespace clip2 {

EvalReport recognition_report(const std::vector<InstancePrediction>& predictions,
                              const std::vector<LabeledInstance>& labels,
                              const std::vector<std::string>& class_names) {
  std::unordered_map<std::string, const LabeledInstance*> by_id;
  for (const auto& l : labels) {
    if (!by_id.emplace(l.instance_id, &l).second) throw InvalidArgument("duplicate label for instance " + l.instance_id);
  }
  struct Tally {
    std::size_t n = 0, hit1 = 0, hit5 = 0;
  };
  std::map<std::size_t, Tally> tallies;
  std::unordered_map<std::string, bool> predicted;
  for (const auto& p : predictions) {
    auto it = by_id.find(p.instance_id);
    if (it == by_id.end()) throw InvalidArgument("missing label for instance " + p.instance_id);
    if (!predicted.emplace(p.instance_id, true).second) throw InvalidArgument("duplicate prediction for " + p.instance_id);
    if (p.top.empty()) throw InvalidArgument("empty prediction for instance " + p.instance_id);
    const std::size_t truth = it->second->true_class;
    Tally& t = tallies[truth];
    ++t.n;
    if (p.top.front().class_index == truth) ++t.hit1;
    const std::size_t depth = std::min<std::size_t>(5, p.top.size());
    for (std::size_t k = 0; k < depth; ++k) {
      if (p.top[k].class_index == truth) {
        ++t.hit5;
        break;
      }
    }
  }
  EvalReport report;
  report.instances = predictions.size();
  report.unpredicted = labels.size() - predicted.size();
  for (const auto& [cls, t] : tallies) {
    ClassAccuracy acc;
    acc.class_index = cls;
    acc.name = cls < class_names.size() ? class_names[cls] : std::to_string(cls);
    acc.instances = t.n;
    acc.top1 = static_cast<double>(t.hit1) / static_cast<double>(t.n);
    acc.top5 = static_cast<double>(t.hit5) / static_cast<double>(t.n);
    report.average_top1 += acc.top1;
    report.average_top5 += acc.top5;
    report.classes.push_back(acc);
  }
  if (!report.classes.empty()) {
    report.average_top1 /= static_cast<double>(report.classes.size());
    report.average_top5 /= static_cast<double>(report.classes.size());
  }
  return report;
}

LocalizationResult localization_pr(const std::vector<LocatedProxy>& proxies, const std::vector<LabeledInstance>& gts,
                                   double threshold) {
  if (!(threshold > 0.0)) throw InvalidArgument("localization threshold must be > 0");
  struct Pair {
    double distance;
    std::size_t proxy, gt;
  };
  std::vector<Pair> pairs;
  std::size_t gt_count = 0;
  for (std::size_t g = 0; g < gts.size(); ++g) {
    if (!gts[g].center) continue;
    ++gt_count;
    for (std::size_t p = 0; p < proxies.size(); ++p) {
      if (proxies[p].predicted_class != gts[g].true_class) continue;
      const double d = (proxies[p].center - *gts[g].center).norm();
      if (d < threshold) pairs.push_back({d, p, g});
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    return std::tie(a.distance, a.proxy, a.gt) < std::tie(b.distance, b.proxy, b.gt);
  });
  std::vector<char> proxy_used(proxies.size(), 0), gt_used(gts.size(), 0);
  LocalizationResult r;
  r.threshold = threshold;
  for (const auto& pr : pairs) {
    if (proxy_used[pr.proxy] || gt_used[pr.gt]) continue;
    proxy_used[pr.proxy] = gt_used[pr.gt] = 1;
    ++r.true_positives;
  }
  r.false_positives = proxies.size() - r.true_positives;
  r.false_negatives = gt_count - r.true_positives;
  const std::size_t p_den = r.true_positives + r.false_positives;
  const std::size_t r_den = r.true_positives + r.false_negatives;
  if (p_den > 0) r.precision = static_cast<double>(r.true_positives) / static_cast<double>(p_den);
  if (r_den > 0) r.recall = static_cast<double>(r.true_positives) / static_cast<double>(r_den);
  return r;
}

std::string EvalReport::format() const {
  std::ostringstream out;
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "class_index\tname\tinstances\ttop1\ttop5\n";
  for (const auto& c : classes) {
    out << c.class_index << '\t' << c.name << '\t' << c.instances << '\t' << c.top1 << '\t' << c.top5 << '\n';
  }
  out << "Avg.\t\t" << instances << '\t' << average_top1 << '\t' << average_top5 << '\n';
  if (unpredicted > 0) out << "unpredicted\t\t" << unpredicted << "\t\t\n";
  if (localization) {
    const auto& l = *localization;
    auto opt = [](const std::optional<double>& v) {
      std::ostringstream s;
      s << std::setprecision(std::numeric_limits<double>::max_digits10);
      if (v) s << *v; else s << "undefined";
      return s.str();
    };
    out << "# localization\tthreshold\ttp\tfp\tfn\tprecision\trecall\n";
    out << "localization\t" << l.threshold << '\t' << l.true_positives << '\t' << l.false_positives << '\t'
        << l.false_negatives << '\t' << opt(l.precision) << '\t' << opt(l.recall) << '\n';
  }
  return out.str();
}

std::string format_labels(const std::vector<LabeledInstance>& labels) {
  std::ostringstream out;
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& l : labels) {
    out << l.instance_id << '\t' << l.true_class;
    if (l.center) out << '\t' << l.center->x() << '\t' << l.center->y() << '\t' << l.center->z();
    out << '\n';
  }
  return out.str();
}

std::vector<LabeledInstance> parse_labels(const std::string& text) {
  std::vector<LabeledInstance> out;
  std::istringstream in(text);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> f;
    std::istringstream row(line);
    std::string field;
    while (std::getline(row, field, '\t')) f.push_back(field);
    const std::string where = "labels line " + std::to_string(n);
    if (f.size() != 2 && f.size() != 5) throw FormatError(where + ": expected 2 or 5 fields");
    LabeledInstance l;
    l.instance_id = f[0];
    try {
      std::size_t used = 0;
      const long long cls = std::stoll(f[1], &used);
      if (used != f[1].size() || cls < 0) throw std::invalid_argument(f[1]);
      l.true_class = static_cast<std::size_t>(cls);
      if (f.size() == 5) l.center = Point3(std::stod(f[2]), std::stod(f[3]), std::stod(f[4]));
    } catch (const std::exception&) {
      throw FormatError(where + ": bad number");
    }
    out.push_back(std::move(l));
  }
  return out;
}

std::vector<LabeledInstance> read_labels(const std::string& path) {
  try {
    return parse_labels(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

}  // namespace clip2
