// Copyright 2026 The Flipset Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"

#include "flipset/cli.hpp"
#include "flipset/reports.hpp"

namespace flipset {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  int code = 0;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  args.insert(args.begin(), "flipset");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "flipset_cli_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<std::string> synthetic_args(const fs::path& out) {
  return {"--format", "synthetic", "--seed", "7", "--name", "blobs", "-o", out.string(),
          "--max-test-points", "40"};
}

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

const fs::path kMiniCorpus = fs::path(FLIPSET_SOURCE_DIR) / "data" / "mini_sentiment";

TEST_CASE("cli train: the mini corpus yields a model and metrics") {
  const fs::path out = fresh_dir("train_mini");
  const auto r = run({"train", "-c", (kMiniCorpus / "config.json").string(), "--dataset",
                      (kMiniCorpus / "corpus.jsonl").string(), "-o", out.string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(fs::exists(out / "model" / "model.json"));
  CHECK(fs::exists(out / "model" / "theta.bin"));
  CHECK(fs::exists(out / "model" / "vocab.json"));
  CHECK(fs::exists(out / "model" / "summary.txt"));
  CHECK(r.out.find("test accuracy") != std::string::npos);
  CHECK(r.out.find("test AUC") != std::string::npos);
}

TEST_CASE("cli train: a missing dataset exits 2 and writes nothing") {
  const fs::path out = fresh_dir("missing");
  const auto r = run({"train", "--format", "jsonl", "--dataset", (out / "nope.jsonl").string(), "-o",
                      (out / "result").string()});
  CHECK(r.code == 2);
  CHECK_FALSE(r.err.empty());
  CHECK_FALSE(fs::exists(out / "result"));
}

TEST_CASE("cli train: bad flags exit 2") {
  CHECK(run({"train", "--lambda", "-1"}).code == 2);
  CHECK(run({"train", "--no-such-flag"}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
}

TEST_CASE("cli train: a rerun writes a bitwise identical model") {
  const fs::path out = fresh_dir("det");
  REQUIRE(run(concat({"train"}, synthetic_args(out))).code == 0);
  const std::string theta = read_file(out / "model" / "theta.bin");
  const std::string model = read_file(out / "model" / "model.json");
  fs::remove_all(out / "model");
  REQUIRE(run(concat({"train"}, synthetic_args(out))).code == 0);
  CHECK(read_file(out / "model" / "theta.bin") == theta);
  CHECK(read_file(out / "model" / "model.json") == model);
}

TEST_CASE("cli flipset: searches a trained model and rejects bad indices") {
  const fs::path out = fresh_dir("flipset");
  REQUIRE(run(concat({"train"}, synthetic_args(out))).code == 0);
  const std::string model = (out / "model").string();
  const auto ok = run({"flipset", "-m", model, "-t", "3", "--algorithm", "greedy", "--verify"});
  REQUIRE_MESSAGE(ok.code == 0, ok.err);
  CHECK(ok.out.find("test point 3") != std::string::npos);
  const auto stored = nlohmann::json::parse(read_file(out / "model" / "flipset_greedy_3.json"));
  CHECK(stored.at("test_index") == 3);
  CHECK(run({"flipset", "-m", model, "-t", "100000"}).code != 0);
  CHECK(run({"flipset", "-m", model, "-t", "-1"}).code != 0);
  CHECK(run({"flipset", "-m", (out / "none").string(), "-t", "0"}).code != 0);
}

TEST_CASE("cli experiment: reruns reproduce the summary byte for byte") {
  const fs::path a = fresh_dir("exp_a");
  const fs::path b = fresh_dir("exp_b");
  const auto ra = run(concat({"experiment"}, synthetic_args(a)));
  REQUIRE_MESSAGE(ra.code == 0, ra.err);
  REQUIRE(run(concat({"experiment", "-j", "3"}, synthetic_args(b))).code == 0);
  const fs::path sub = "experiment_iterative";
  for (const char* name : {"summary.json", "points.jsonl", "k_confidence.csv", "k_histogram.csv"}) {
    CHECK_MESSAGE(read_file(a / sub / name) == read_file(b / sub / name), name);
  }
  CHECK(ra.out.find("found") != std::string::npos);
  CHECK(ra.out.find("wall time") != std::string::npos);
}

TEST_CASE("cli experiment: finished points are reused on resume") {
  const fs::path out = fresh_dir("exp_resume");
  const auto args = concat({"experiment", "--algorithm", "greedy"}, synthetic_args(out));
  REQUIRE(run(args).code == 0);
  const fs::path points = out / "experiment_greedy" / "points.jsonl";
  const std::string original = read_file(points);

  // Keep the first ten records and mark one, as an interrupted run would leave them.
  std::istringstream lines(original);
  std::string line, kept;
  for (int i = 0; i < 10 && std::getline(lines, line); ++i) {
    auto record = nlohmann::json::parse(line);
    if (i == 0) record["estimated_prob"] = 0.123456;
    kept += record.dump() + "\n";
  }
  write_atomic(points, kept);
  REQUIRE(run(args).code == 0);
  const auto resumed = read_points_jsonl(points);
  REQUIRE(resumed.size() == 40);
  CHECK(resumed[0].result.estimated_prob == 0.123456);

  REQUIRE(run(concat(args, {"--fresh"})).code == 0);
  CHECK(read_file(points) == original);

  // A changed config starts over.
  REQUIRE(run(concat(args, {"--lambda", "0.2"})).code == 0);
  CHECK(read_file(points) != original);
}

TEST_CASE("cli calibrate: passes on synthetic data and gates with exit 4") {
  const fs::path out = fresh_dir("calibrate");
  nlohmann::json config = {{"dataset", {{"format", "synthetic"}}},
                           {"synthetic", {{"n_train", 60}, {"n_test", 10}, {"dimension", 3}}},
                           {"output_dir", out.string()},
                           {"calibration", {{"points", 3}, {"min_r", 0.9}}}};
  const fs::path path = out / "config.json";
  write_atomic(path, config.dump());
  const auto ok = run({"calibrate", "-c", path.string()});
  REQUIRE_MESSAGE(ok.code == 0, ok.err);
  const auto report = nlohmann::json::parse(read_file(out / "calibration.json"));
  CHECK(report.contains("mean_r"));

  config["calibration"]["min_r"] = 1.5;
  write_atomic(path, config.dump());
  CHECK(run({"calibrate", "-c", path.string()}).code == 4);
}

TEST_CASE("cli attribution: writes the method by k table") {
  const fs::path out = fresh_dir("attribution");
  const auto r = run(concat({"attribution", "--methods", "IP,RANDOM", "--k-grid", "0,5"},
                            synthetic_args(out)));
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const std::string csv = read_file(out / "attribution.csv");
  CHECK(csv.rfind("method,k,mean_abs_delta\n", 0) == 0);
  CHECK(csv.find("RANDOM,0,0") != std::string::npos);
  CHECK(run(concat({"attribution", "--methods", "NOPE"}, synthetic_args(out))).code == 2);
}

}  // namespace
}  // namespace flipset
