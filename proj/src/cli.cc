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
#include "clip2/cli.h"

#include <filesystem>
#include <iomanip>
#include <map>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "clip2/binary_io.h"
#include "clip2/contrastive.h"
#include "clip2/errors.h"
#include "clip2/evaluation.h"
#include "clip2/fixture.h"
#include "clip2/geometry_io.h"
#include "clip2/point_encoder.h"
#include "clip2/proxy_collection.h"
#include "clip2/zero_shot.h"

namespace clip2::cli {
namespace {

namespace fs = std::filesystem;

void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw ConfigError(std::string("missing required path: ") + what);
  if (!fs::exists(path)) throw IoError(std::string(what) + " not found: " + path);
}

// ---------------------------------------------------------------- make-fixture

struct FixtureOptions {
  std::string out;
  std::uint64_t seed = 7;
  int classes = 3;
  std::vector<std::string> class_names;
  int objects_per_class = 20;
  double held_out = 0.25;
  std::string scene_type = "indoor";
  int objects_per_scene = 3;
  int dim = 16;
  int distractors = 1;
};

int cmd_make_fixture(const FixtureOptions& o, std::ostream& log) {
  FixtureSpec spec;
  if (!o.class_names.empty()) {
    spec.class_names = o.class_names;
  } else {
    static const char* kNames[] = {"cube", "ball", "pole", "plate", "rod"};
    if (o.classes < 1 || o.classes > 5) throw ConfigError("--classes must be in [1, 5] without --class-names");
    spec.class_names.assign(kNames, kNames + o.classes);
  }
  spec.objects_per_class = o.objects_per_class;
  spec.held_out_fraction = o.held_out;
  spec.scene_type = parse_scene_type(o.scene_type);
  spec.objects_per_scene = o.objects_per_scene;
  spec.embed_dim = o.dim;
  spec.distractors_per_scene = o.distractors;
  spec.seed = o.seed;
  const Fixture fixture = generate_fixture(spec);
  write_fixture(fixture, o.out);
  for (const auto& split : fixture.splits) {
    std::size_t instances = 0;
    for (const auto& s : split.scenes) instances += s.labels.size();
    log << "make-fixture: " << split.name << " scenes=" << split.scenes.size() << " instances=" << instances << '\n';
  }
  return kExitOk;
}

// --------------------------------------------------------------------- collect

struct CollectOptions {
  std::string scenes;
  std::string detections;
  std::string vocabulary;
  std::string embeddings;
  std::string out;
  std::string log_path;
  std::string scene_type;
  double score_threshold = 0.3;
  CollectionConfig config;
  int workers = 1;
};

struct SceneEntry {
  std::string id;
  SceneType type;
};

std::vector<SceneEntry> read_scene_list(const std::string& dir, const std::string& type_override) {
  const std::string path = dir + "/scenes.txt";
  require_file(path, "scene list");
  std::istringstream in(read_file(path));
  std::vector<SceneEntry> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    std::string id, type;
    std::getline(row, id, '\t');
    std::getline(row, type, '\t');
    if (!type_override.empty()) type = type_override;
    if (type.empty()) throw ConfigError("scene " + id + " has no type; pass --scene-type");
    out.push_back({id, parse_scene_type(type)});
  }
  return out;
}

int cmd_collect(const CollectOptions& o, std::ostream& log) {
  if (o.workers < 1) throw ConfigError("--workers must be >= 1");
  const std::string detections_path = o.detections.empty() ? o.scenes + "/detections.tsv" : o.detections;
  require_file(o.vocabulary, "vocabulary");
  require_file(o.embeddings, "embeddings");
  require_file(detections_path, "detections");
  const std::vector<SceneEntry> scenes = read_scene_list(o.scenes, o.scene_type);
  for (const auto& s : scenes) {
    require_file(o.scenes + "/" + s.id + ".calib", "calibration");
    require_file(o.scenes + "/" + s.id + (s.type == SceneType::kIndoor ? ".depth" : ".pcf"), "scene data");
  }
  const VocabularyList vocab = VocabularyList::read(o.vocabulary);
  const PrecomputedEmbeddings embeddings = PrecomputedEmbeddings::read(o.embeddings);
  const DetectionSet detections = read_detections(detections_path, vocab.size(), o.score_threshold);

  std::vector<CollectionResult> results(scenes.size());
  std::vector<std::exception_ptr> errors(scenes.size());
  auto work = [&](std::size_t first) {
    for (std::size_t i = first; i < scenes.size(); i += static_cast<std::size_t>(o.workers)) {
      try {
        const auto& s = scenes[i];
        const CameraCalibration calib = read_calibration(o.scenes + "/" + s.id + ".calib");
        static const std::vector<Detection> kNone;
        const auto it = detections.find(s.id);
        const auto& dets = it == detections.end() ? kNone : it->second;
        if (s.type == SceneType::kIndoor) {
          results[i] = collect_indoor(s.id, read_depth_image(o.scenes + "/" + s.id + ".depth"), calib, dets,
                                      embeddings, o.config);
        } else {
          results[i] = collect_outdoor(s.id, read_point_cloud(o.scenes + "/" + s.id + ".pcf"), calib, dets,
                                       embeddings, o.config);
        }
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (o.workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < o.workers; ++w) pool.emplace_back(work, static_cast<std::size_t>(w));
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::vector<TripletRecord> records;
  std::ostringstream scene_log;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const auto& r = results[i];
    std::map<std::string, std::size_t> reasons;
    for (const auto& s : r.skipped) ++reasons[to_string(s.reason)];
    scene_log << "scene\t" << scenes[i].id << "\t" << to_string(scenes[i].type) << "\trecords=" << r.records.size()
              << "\tskipped=" << r.skipped.size();
    for (const auto& [reason, n] : reasons) scene_log << '\t' << reason << '=' << n;
    scene_log << '\n';
    records.insert(records.end(), r.records.begin(), r.records.end());
  }
  write_triplets(records, embeddings.dim(), o.out);
  if (!o.log_path.empty()) write_file(o.log_path, scene_log.str());
  log << scene_log.str() << "collect: " << records.size() << " records from " << scenes.size() << " scenes -> "
      << o.out << '\n';
  return kExitOk;
}

// -------------------------------------------------------------------- pretrain

struct PretrainOptions {
  std::string triplets;
  std::string vocabulary;
  std::string embeddings;
  std::string out;
  std::string report;
  std::string resume;
  TrainingConfig train;
  EncoderConfig encoder;
  int log_every = 50;
};

int cmd_pretrain(PretrainOptions o, std::ostream& log) {
  o.train.validate();
  require_file(o.triplets, "triplets");
  require_file(o.vocabulary, "vocabulary");
  require_file(o.embeddings, "embeddings");
  if (o.out.empty()) throw ConfigError("--out is required");
  const VocabularyList vocab = VocabularyList::read(o.vocabulary);
  const PrecomputedEmbeddings embeddings = PrecomputedEmbeddings::read(o.embeddings);
  int dim = 0;
  const std::vector<TripletRecord> records = read_triplets(o.triplets, &dim);
  if (dim != embeddings.dim()) throw ConfigError("triplet embedding dimension does not match embeddings file");
  o.encoder.embed_dim = dim;
  std::optional<EncoderParams> initial;
  if (!o.resume.empty()) {
    require_file(o.resume, "resume checkpoint");
    initial = read_checkpoint(o.resume);
    o.encoder = initial->config;
    log << "pretrain: resuming from " << o.resume << '\n';
  }
  log << "pretrain: " << records.size() << " triplets, C=" << dim << ", batch " << o.train.batch_size << '\n';
  const auto progress = [&](const StepLog& s) {
    if (o.log_every > 0 && s.step % o.log_every == 0) {
      log << "step " << s.step << " lr " << s.learning_rate << " loss " << s.loss << '\n';
    }
  };
  const TrainingReport report = train(records, vocab, embeddings, o.train, o.encoder, std::move(initial), progress);
  write_checkpoint(report.params, o.out);
  if (!o.report.empty()) write_file(o.report, report.format());
  log << "pretrain: final loss " << report.steps.back().loss << ", checkpoint " << o.out << '\n';
  return kExitOk;
}

// -------------------------------------------------------------------- classify

struct ClassifyOptions {
  std::string checkpoint;
  std::string classes;
  std::string embeddings;
  std::string proxies;
  std::string out;
  std::string logits_out;
  std::vector<std::string> ensemble;
  std::string prompt_template = kDefaultPromptTemplate;
  std::uint64_t seed = 0;
  int top_k = 5;
};

int cmd_classify(const ClassifyOptions& o, std::ostream& log) {
  require_file(o.checkpoint, "checkpoint");
  require_file(o.classes, "class list");
  require_file(o.embeddings, "embeddings");
  require_file(o.proxies, "proxies");
  if (o.out.empty()) throw ConfigError("--out is required");
  for (const auto& e : o.ensemble) require_file(e, "ensemble logits");
  if (o.top_k < 1) throw ConfigError("--top-k must be >= 1");

  const std::vector<std::string> names = read_class_names(o.classes);
  if (names.empty()) throw ConfigError("class list is empty: " + o.classes);
  const EncoderParams params = read_checkpoint(o.checkpoint);
  const PrecomputedEmbeddings embeddings = PrecomputedEmbeddings::read(o.embeddings);
  const ClassBank bank = build_class_bank(names, o.prompt_template, embeddings);
  if (bank.features.cols() != params.config.embed_dim) throw ConfigError("checkpoint and embeddings disagree on C");
  const std::vector<TripletRecord> records = read_triplets(o.proxies);

  std::vector<std::map<std::string, Eigen::VectorXd>> external;
  for (const auto& path : o.ensemble) {
    std::map<std::string, Eigen::VectorXd> rows;
    for (auto& r : read_logits(path)) {
      if (r.probabilities.size() != static_cast<Eigen::Index>(names.size())) {
        throw ConfigError("ensemble logits in " + path + " have a different class count");
      }
      rows[r.instance_id] = std::move(r.probabilities);
    }
    external.push_back(std::move(rows));
  }

  std::vector<InstancePrediction> rows;
  std::vector<InstanceLogits> logits;
  for (const auto& rec : records) {
    const PointCloud sampled =
        sample_points(rec.point_proxy, params.config.num_points, mix_seed(o.seed, fnv1a64(rec.instance_id)));
    Prediction pred = classify(forward(params, sampled).embedding, bank);
    if (!external.empty()) {
      std::vector<Eigen::VectorXd> inputs{pred.probabilities};
      for (std::size_t e = 0; e < external.size(); ++e) {
        const auto it = external[e].find(rec.instance_id);
        if (it == external[e].end()) throw ConfigError("instance " + rec.instance_id + " missing from " + o.ensemble[e]);
        inputs.push_back(it->second);
      }
      pred = ensemble(inputs);
    }
    rows.push_back(to_instance_prediction(rec.instance_id, pred, names, static_cast<std::size_t>(o.top_k)));
    logits.push_back({rec.instance_id, pred.probabilities});
  }
  write_file(o.out, format_predictions(rows));
  if (!o.logits_out.empty()) write_file(o.logits_out, format_logits(logits));
  log << "classify: " << rows.size() << " instances over " << names.size() << " classes -> " << o.out << '\n';
  return kExitOk;
}

// -------------------------------------------------------------------- evaluate

struct EvaluateOptions {
  std::string predictions;
  std::string labels;
  std::string classes;
  std::string out;
  std::string proxies;
  double threshold = 2.0;
};

int cmd_evaluate(const EvaluateOptions& o, std::ostream& log) {
  require_file(o.predictions, "predictions");
  require_file(o.labels, "labels");
  if (!o.classes.empty()) require_file(o.classes, "class list");
  if (!o.proxies.empty()) require_file(o.proxies, "proxies");
  if (o.out.empty()) throw ConfigError("--out is required");
  if (!(o.threshold > 0.0)) throw ConfigError("--threshold must be > 0");

  const auto predictions = read_predictions(o.predictions);
  const auto labels = read_labels(o.labels);
  const std::vector<std::string> names = o.classes.empty() ? std::vector<std::string>{} : read_class_names(o.classes);
  EvalReport report;
  try {
    report = recognition_report(predictions, labels, names);
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  if (!o.proxies.empty()) {
    std::map<std::string, std::size_t> top1;
    for (const auto& p : predictions) top1[p.instance_id] = p.top.front().class_index;
    std::vector<LocatedProxy> located;
    for (const auto& rec : read_triplets(o.proxies)) {
      const auto it = top1.find(rec.instance_id);
      if (it == top1.end()) continue;
      located.push_back({aabb(rec.point_proxy).center(), it->second});
    }
    report.localization = localization_pr(located, labels, o.threshold);
  }
  write_file(o.out, report.format());
  log << "evaluate: Avg. top1 " << report.average_top1 << " over " << report.classes.size() << " classes -> " << o.out
      << '\n';
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& log) {
  CLI::App app{"Triplet-proxy collection, cross-modal contrastive pretraining and zero-shot evaluation for point clouds"};
  app.set_config("--config", "", "Key/value config file (keys as subcommand.option or [subcommand] sections)");
  app.require_subcommand(1);

  FixtureOptions fx;
  auto* make_fixture = app.add_subcommand("make-fixture", "Generate a synthetic scene set with known geometry");
  make_fixture->add_option("--out", fx.out, "Output directory")->required();
  make_fixture->add_option("--seed", fx.seed, "Random seed")->capture_default_str();
  make_fixture->add_option("--classes", fx.classes, "Number of classes (built-in names)")->capture_default_str();
  make_fixture->add_option("--class-names", fx.class_names, "Explicit class names")->delimiter(',');
  make_fixture->add_option("--objects-per-class", fx.objects_per_class, "Objects per class")->capture_default_str();
  make_fixture->add_option("--held-out", fx.held_out, "Fraction of objects in the test split")->capture_default_str();
  make_fixture->add_option("--scene-type", fx.scene_type, "indoor (RGB-D) or outdoor (LiDAR)")->capture_default_str();
  make_fixture->add_option("--objects-per-scene", fx.objects_per_scene, "Objects per scene")->capture_default_str();
  make_fixture->add_option("--dim", fx.dim, "Embedding dimension C")->capture_default_str();
  make_fixture->add_option("--distractors", fx.distractors, "Low-score detections per scene")->capture_default_str();

  CollectOptions co;
  auto* collect = app.add_subcommand("collect", "Extract triplet proxies from scenes and detections");
  collect->add_option("--scenes", co.scenes, "Scene directory containing scenes.txt")->required();
  collect->add_option("--detections", co.detections, "Detections TSV (default <scenes>/detections.tsv)");
  collect->add_option("--vocabulary", co.vocabulary, "Caption list, one per line")->required();
  collect->add_option("--embeddings", co.embeddings, "EMB1 embedding file")->required();
  collect->add_option("--out", co.out, "Output TRP1 triplet file")->required();
  collect->add_option("--log", co.log_path, "Per-scene collection log file");
  collect->add_option("--scene-type", co.scene_type, "Override scene type: indoor or outdoor");
  collect->add_option("--score-threshold", co.score_threshold, "Detection score threshold")->capture_default_str();
  collect->add_option("--near", co.config.near, "Frustum near plane (m)")->capture_default_str();
  collect->add_option("--far", co.config.far, "Frustum far plane (m)")->capture_default_str();
  collect->add_option("--band", co.config.band.half_width, "Foreground depth band half-width (m)")->capture_default_str();
  collect->add_option("--min-points", co.config.min_points, "Minimum indoor proxy size")->capture_default_str();
  collect->add_option("--eps", co.config.eps, "DBSCAN eps (m)")->capture_default_str();
  collect->add_option("--min-pts", co.config.min_pts, "DBSCAN min_pts")->capture_default_str();
  collect->add_option("--min-cluster-size", co.config.min_cluster_size, "Ignore smaller clusters")->capture_default_str();
  collect->add_option("--workers", co.workers, "Scene-level worker threads")->capture_default_str();

  PretrainOptions po;
  auto* pretrain = app.add_subcommand("pretrain", "Contrastive pretraining of the point encoder");
  pretrain->add_option("--triplets", po.triplets, "TRP1 triplet file")->required();
  pretrain->add_option("--vocabulary", po.vocabulary, "Caption list")->required();
  pretrain->add_option("--embeddings", po.embeddings, "EMB1 embedding file")->required();
  pretrain->add_option("--out", po.out, "Output ENC1 checkpoint")->required();
  pretrain->add_option("--report", po.report, "Training report output");
  pretrain->add_option("--resume", po.resume, "Start from this checkpoint");
  pretrain->add_option("--batch-size", po.train.batch_size, "Mini-batch size N")->capture_default_str();
  pretrain->add_option("--temperature", po.train.temperature, "Temperature tau")->capture_default_str();
  pretrain->add_option("--lambda1", po.train.lambda1, "Text-point loss weight")->capture_default_str();
  pretrain->add_option("--lambda2", po.train.lambda2, "Image-point loss weight")->capture_default_str();
  pretrain->add_option("--lr", po.train.learning_rate, "Peak learning rate")->capture_default_str();
  pretrain->add_option("--weight-decay", po.train.weight_decay, "Decoupled weight decay")->capture_default_str();
  pretrain->add_option("--beta1", po.train.beta1, "First-moment decay")->capture_default_str();
  pretrain->add_option("--beta2", po.train.beta2, "Second-moment decay")->capture_default_str();
  pretrain->add_option("--warmup", po.train.warmup_iters, "Linear warmup iterations")->capture_default_str();
  pretrain->add_option("--epochs", po.train.total_epochs, "Training epochs")->capture_default_str();
  pretrain->add_option("--steps", po.train.max_steps, "Total steps (overrides --epochs when > 0)")->capture_default_str();
  pretrain->add_option("--seed", po.train.seed, "Random seed")->capture_default_str();
  pretrain->add_option("--balance-threshold", po.train.balance_threshold, "Repeat-factor threshold t")->capture_default_str();
  pretrain->add_option("--template", po.train.prompt_template, "Prompt template with one {}")->capture_default_str();
  pretrain->add_option("--points", po.encoder.num_points, "Points sampled per object")->capture_default_str();
  pretrain->add_option("--hidden1", po.encoder.hidden1, "Point MLP width 1")->capture_default_str();
  pretrain->add_option("--hidden2", po.encoder.hidden2, "Point MLP width 2")->capture_default_str();
  pretrain->add_option("--hidden3", po.encoder.hidden3, "Projection head width")->capture_default_str();
  pretrain->add_option("--log-every", po.log_every, "Progress log interval (steps)")->capture_default_str();

  ClassifyOptions cl;
  auto* classify_cmd = app.add_subcommand("classify", "Zero-shot classification of point proxies");
  classify_cmd->add_option("--checkpoint", cl.checkpoint, "ENC1 checkpoint")->required();
  classify_cmd->add_option("--classes", cl.classes, "Class names, one per line")->required();
  classify_cmd->add_option("--embeddings", cl.embeddings, "EMB1 file with prompt embeddings")->required();
  classify_cmd->add_option("--proxies", cl.proxies, "TRP1 file with point proxies")->required();
  classify_cmd->add_option("--out", cl.out, "Predictions TSV")->required();
  classify_cmd->add_option("--logits-out", cl.logits_out, "Full probability vectors TSV");
  classify_cmd->add_option("--ensemble", cl.ensemble, "Logit files summed into the output");
  classify_cmd->add_option("--template", cl.prompt_template, "Prompt template with one {}")->capture_default_str();
  classify_cmd->add_option("--seed", cl.seed, "Point sampling seed")->capture_default_str();
  classify_cmd->add_option("--top-k", cl.top_k, "Classes listed per instance")->capture_default_str();

  EvaluateOptions ev;
  auto* evaluate = app.add_subcommand("evaluate", "Per-class accuracy and localization precision/recall");
  evaluate->add_option("--predictions", ev.predictions, "Predictions TSV")->required();
  evaluate->add_option("--labels", ev.labels, "Labels TSV")->required();
  evaluate->add_option("--classes", ev.classes, "Class names for the report");
  evaluate->add_option("--out", ev.out, "Report TSV")->required();
  evaluate->add_option("--proxies", ev.proxies, "TRP1 proxies; enables localization scoring");
  evaluate->add_option("--threshold", ev.threshold, "Centre-distance threshold (m)")->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    std::ostringstream out, err;
    const int code = app.exit(e, out, err);
    log << out.str() << err.str();
    if (code == 0) {
      std::cout << out.str();
      return kExitOk;
    }
    return kExitConfig;
  }

  try {
    if (*make_fixture) return cmd_make_fixture(fx, log);
    if (*collect) return cmd_collect(co, log);
    if (*pretrain) return cmd_pretrain(po, log);
    if (*classify_cmd) return cmd_classify(cl, log);
    if (*evaluate) return cmd_evaluate(ev, log);
  } catch (const NumericalError& e) {
    log << "error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const IoError& e) {
    log << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const ConfigError& e) {
    log << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    log << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const fs::filesystem_error& e) {
    log << "error: " << e.what() << '\n';
    return kExitIo;
  }
  return kExitConfig;
}

}  // namespace clip2::cli
