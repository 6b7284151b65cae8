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

#include <filesystem>
#include <fstream>
#include <sstream>

#include <doctest.h>

#include "clip2/binary_io.h"
#include "clip2/evaluation.h"
#include "clip2/proxy_collection.h"
#include "clip2/zero_shot.h"
#include "pipeline.h"
#include "test_support.h"

namespace clip2 {
namespace {

namespace fs = std::filesystem;
using testing::run_cli;

std::size_t count_lines(const std::string& text, const std::string& prefix = "") {
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) n += !line.empty() && line.rfind(prefix, 0) == 0;
  return n;
}

std::vector<std::string> collect_args(const std::string& fx, const std::string& split, const std::string& out) {
  return {"collect", "--scenes", fx + "/" + split, "--vocabulary", fx + "/vocabulary.txt", "--embeddings",
          fx + "/embeddings.emb", "--out", out};
}

TEST_CASE("make-fixture is byte-identical for a fixed seed") {
  testing::TempDir dir("fx");
  REQUIRE(run_cli({"make-fixture", "--out", dir / "a", "--seed", "3", "--objects-per-class", "4"}).code == 0);
  REQUIRE(run_cli({"make-fixture", "--out", dir / "b", "--seed", "3", "--objects-per-class", "4"}).code == 0);
  REQUIRE(run_cli({"make-fixture", "--out", dir / "c", "--seed", "4", "--objects-per-class", "4"}).code == 0);
  std::size_t files = 0;
  bool any_difference = false;
  for (const auto& entry : fs::recursive_directory_iterator(dir / "a")) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), dir / "a");
    CHECK(read_file(entry.path().string()) == read_file((fs::path(dir / "b") / rel).string()));
    const fs::path other = fs::path(dir / "c") / rel;
    if (!fs::exists(other) || read_file(other.string()) != read_file(entry.path().string())) any_difference = true;
    ++files;
  }
  CHECK(files > 5);
  CHECK(any_difference);
}

TEST_CASE("3 classes x 20 objects yield 60 labelled instances") {
  testing::TempDir dir("fx60");
  REQUIRE(run_cli({"make-fixture", "--out", dir.str(), "--classes", "3", "--objects-per-class", "20"}).code == 0);
  const auto train = read_labels(dir / "train/labels.tsv");
  const auto test = read_labels(dir / "test/labels.tsv");
  CHECK(train.size() + test.size() == 60);
  std::vector<int> per_class(3, 0);
  for (const auto* split : {&train, &test}) {
    for (const auto& l : *split) per_class.at(l.true_class)++;
  }
  CHECK(per_class == std::vector<int>{20, 20, 20});
}

TEST_CASE("collection recovers the fixture objects and logs one line per scene") {
  for (const std::string type : {"indoor", "outdoor"}) {
    CAPTURE(type);
    testing::TempDir dir("collect");
    REQUIRE(run_cli({"make-fixture", "--out", dir / "fx", "--objects-per-class", "5", "--held-out", "0.2",
                     "--scene-type", type})
                .code == 0);
    const std::size_t scenes = count_lines(read_file(dir / "fx/train/scenes.txt"));
    const std::size_t objects = read_labels(dir / "fx/train/labels.tsv").size();
    CHECK(scenes == 4);
    auto args = collect_args(dir / "fx", "train", dir / "train.trp");
    args.insert(args.end(), {"--log", dir / "collect.log", "--workers", "3"});
    const auto r = run_cli(args);
    REQUIRE(r.code == 0);
    const std::string log = read_file(dir / "collect.log");
    CHECK(count_lines(log, "scene\t") == scenes);
    CHECK(count_lines(r.log, "scene\t") == scenes);
    const auto records = read_triplets(dir / "train.trp");
    CHECK(records.size() == objects);
    CHECK(records.size() * 100 >= objects * 95);

    // Worker count does not change the output.
    auto serial = collect_args(dir / "fx", "train", dir / "serial.trp");
    REQUIRE(run_cli(serial).code == 0);
    CHECK(read_file(dir / "serial.trp") == read_file(dir / "train.trp"));
  }
}

TEST_CASE("five-scene fixture produces five log lines") {
  testing::TempDir dir("five");
  REQUIRE(run_cli({"make-fixture", "--out", dir / "fx", "--objects-per-class", "5", "--held-out", "0.2",
                   "--objects-per-scene", "2"})
              .code == 0);
  // 3 classes x 4 training objects at 2 per scene gives 6 scenes; trim to 5.
  std::istringstream in(read_file(dir / "fx/train/scenes.txt"));
  std::string line, kept;
  for (int i = 0; i < 5 && std::getline(in, line); ++i) kept += line + "\n";
  write_file(dir / "fx/train/scenes.txt", kept);
  const auto r = run_cli(collect_args(dir / "fx", "train", dir / "t.trp"));
  REQUIRE(r.code == 0);
  CHECK(count_lines(r.log, "scene\t") == 5);
  std::size_t expected = 0;
  for (const auto& l : read_labels(dir / "fx/train/labels.tsv")) {
    expected += kept.find(l.instance_id.substr(0, l.instance_id.find('#')) + "\t") != std::string::npos;
  }
  CHECK(read_triplets(dir / "t.trp").size() == expected);
}

TEST_CASE("empty detections produce an empty triplet file") {
  testing::TempDir dir("empty");
  REQUIRE(run_cli({"make-fixture", "--out", dir / "fx", "--objects-per-class", "2", "--held-out", "0.5"}).code == 0);
  write_file(dir / "fx/train/detections.tsv", "");
  REQUIRE(run_cli(collect_args(dir / "fx", "train", dir / "t.trp")).code == 0);
  CHECK(read_triplets(dir / "t.trp").empty());
}

TEST_CASE("missing calibration fails with the path") {
  testing::TempDir dir("nocalib");
  REQUIRE(run_cli({"make-fixture", "--out", dir / "fx", "--objects-per-class", "2", "--held-out", "0.5"}).code == 0);
  std::istringstream in(read_file(dir / "fx/train/scenes.txt"));
  std::string first;
  std::getline(in, first);
  const std::string calib = dir / ("fx/train/" + first.substr(0, first.find('\t')) + ".calib");
  fs::remove(calib);
  const auto r = run_cli(collect_args(dir / "fx", "train", dir / "t.trp"));
  CHECK(r.code != 0);
  CHECK(r.log.find(calib) != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "t.trp"));
}

struct SmallRun {
  testing::TempDir dir{"small"};
  std::string fx = dir / "fx";

  SmallRun() {
    REQUIRE(run_cli({"make-fixture", "--out", fx, "--objects-per-class", "6", "--held-out", "0.5"}).code == 0);
    REQUIRE(run_cli(collect_args(fx, "train", dir / "train.trp")).code == 0);
    REQUIRE(run_cli(collect_args(fx, "test", dir / "test.trp")).code == 0);
  }
  std::vector<std::string> pretrain(const std::string& out, std::vector<std::string> extra = {}) const {
    std::vector<std::string> a = {"pretrain", "--triplets", dir / "train.trp", "--vocabulary", fx + "/vocabulary.txt",
                                  "--embeddings", fx + "/embeddings.emb", "--out", out, "--batch-size", "6",
                                  "--points", "64", "--hidden1", "16", "--hidden2", "32", "--hidden3", "32",
                                  "--steps", "10", "--warmup", "2"};
    a.insert(a.end(), extra.begin(), extra.end());
    return a;
  }
  std::vector<std::string> classify(const std::string& ckpt, const std::string& out,
                                    std::vector<std::string> extra = {}) const {
    std::vector<std::string> a = {"classify", "--checkpoint", ckpt, "--classes", fx + "/classes.txt", "--embeddings",
                                  fx + "/embeddings.emb", "--proxies", dir / "test.trp", "--out", out};
    a.insert(a.end(), extra.begin(), extra.end());
    return a;
  }
};

TEST_CASE("pretrain rejects a non-positive temperature") {
  const SmallRun run;
  CHECK(run_cli(run.pretrain(run.dir / "e.ckpt", {"--temperature", "0"})).code == cli::kExitConfig);
  CHECK(run_cli(run.pretrain(run.dir / "e.ckpt", {"--temperature", "-0.5"})).code == cli::kExitConfig);
  CHECK_FALSE(fs::exists(run.dir / "e.ckpt"));
}

TEST_CASE("pretrain is deterministic and resume continues identically") {
  const SmallRun run;
  REQUIRE(run_cli(run.pretrain(run.dir / "a.ckpt", {"--report", run.dir / "a.txt"})).code == 0);
  REQUIRE(run_cli(run.pretrain(run.dir / "b.ckpt", {"--report", run.dir / "b.txt"})).code == 0);
  CHECK(read_file(run.dir / "a.ckpt") == read_file(run.dir / "b.ckpt"));
  CHECK(read_file(run.dir / "a.txt") == read_file(run.dir / "b.txt"));

  REQUIRE(run_cli(run.pretrain(run.dir / "c.ckpt", {"--resume", run.dir / "a.ckpt", "--seed", "5"})).code == 0);
  REQUIRE(run_cli(run.pretrain(run.dir / "d.ckpt", {"--resume", run.dir / "a.ckpt", "--seed", "5"})).code == 0);
  CHECK(read_file(run.dir / "c.ckpt") == read_file(run.dir / "d.ckpt"));
  CHECK(read_file(run.dir / "c.ckpt") != read_file(run.dir / "a.ckpt"));
}

TEST_CASE("classify writes ranked predictions and sums ensemble inputs") {
  const SmallRun run;
  REQUIRE(run_cli(run.pretrain(run.dir / "e.ckpt")).code == 0);
  REQUIRE(run_cli(run.classify(run.dir / "e.ckpt", run.dir / "p.tsv", {"--logits-out", run.dir / "base.tsv"})).code == 0);
  const auto preds = read_predictions(run.dir / "p.tsv");
  const auto test = read_triplets(run.dir / "test.trp");
  REQUIRE(preds.size() == test.size());
  for (const auto& p : preds) {
    CHECK(p.top.size() == 3);
    CHECK(p.top[0].probability >= p.top[1].probability);
  }

  // External "depth branch" outputs: deterministic but unrelated vectors.
  const auto base = read_logits(run.dir / "base.tsv");
  std::vector<InstanceLogits> external;
  for (std::size_t i = 0; i < base.size(); ++i) {
    Eigen::VectorXd v(3);
    v << 0.5, 0.25 + 0.01 * static_cast<double>(i % 5), 0.25 - 0.01 * static_cast<double>(i % 5);
    external.push_back({base[i].instance_id, v});
  }
  write_file(run.dir / "depth.tsv", format_logits(external));
  REQUIRE(run_cli(run.classify(run.dir / "e.ckpt", run.dir / "pe.tsv",
                               {"--ensemble", run.dir / "depth.tsv", "--logits-out", run.dir / "ens.tsv"}))
              .code == 0);
  const auto ens = read_logits(run.dir / "ens.tsv");
  REQUIRE(ens.size() == base.size());
  for (std::size_t i = 0; i < ens.size(); ++i) {
    const Eigen::VectorXd want = (base[i].probabilities + external[i].probabilities) / 2.0;
    CHECK((ens[i].probabilities - want).cwiseAbs().maxCoeff() <= 1e-15);
  }
}

TEST_CASE("classify rejects an empty class list") {
  const SmallRun run;
  REQUIRE(run_cli(run.pretrain(run.dir / "e.ckpt")).code == 0);
  write_file(run.dir / "none.txt", "\n");
  auto args = run.classify(run.dir / "e.ckpt", run.dir / "p.tsv");
  args[4] = run.dir / "none.txt";
  const auto r = run_cli(args);
  CHECK(r.code != 0);
  CHECK(r.log.find("class list is empty") != std::string::npos);
}

TEST_CASE("evaluate reproduces hand-computed metrics through files") {
  testing::TempDir dir("eval");
  write_file(dir / "classes.txt", "A\nB\n");
  write_file(dir / "labels.tsv", "a1\t0\t0\t0\t0\na2\t0\t10\t0\t0\nb1\t1\t0\t5\t0\n");
  write_file(dir / "pred.tsv",
             "a1\t0\tA\t0.9\t1\tB\t0.1\n"
             "a2\t1\tB\t0.8\t0\tA\t0.2\n"
             "b1\t1\tB\t0.7\t0\tA\t0.3\n");
  REQUIRE(run_cli({"evaluate", "--predictions", dir / "pred.tsv", "--labels", dir / "labels.tsv", "--classes",
                   dir / "classes.txt", "--out", dir / "report.tsv"})
              .code == 0);
  const std::string report = read_file(dir / "report.tsv");
  CHECK(testing::report_average(report) == 0.75);

  CHECK(run_cli({"evaluate", "--predictions", dir / "pred.tsv", "--labels", dir / "missing.tsv", "--out",
                 dir / "r.tsv"})
            .code == cli::kExitIo);
}

TEST_CASE("unknown subcommands and missing options are usage errors") {
  CHECK(run_cli({"frobnicate"}).code != 0);
  CHECK(run_cli({"collect"}).code != 0);
  CHECK(run_cli({"--help"}).code == 0);
}

}  // namespace
}  // namespace clip2
