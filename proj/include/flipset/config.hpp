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

#ifndef FLIPSET_CONFIG_HPP_
#define FLIPSET_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "flipset/flipset.hpp"
#include "flipset/influence.hpp"
#include "flipset/ingest.hpp"
#include "flipset/model.hpp"
#include "flipset/verification.hpp"

namespace flipset {

// Where the data comes from. `format` is one of jsonl, csv (text corpora,
// bag-of-words features), embeddings (binary dense vectors) or synthetic
// (generated from `RunConfig::synthetic`; `path` unused).
struct DatasetConfig {
  std::string name = "dataset";
  std::string path;
  std::string format = "synthetic";
};

struct RunConfig {
  DatasetConfig dataset;
  BowConfig bow;
  SyntheticSpec synthetic;
  Hyperparams hyper;
  Algorithm algorithm = Algorithm::kIterative;
  int max_passes = kDefaultMaxPasses;
  std::string output_dir = "flipset-out";
  std::uint64_t seed = 0;
  int parallelism = 1;

  // Experiment: sweep at most this many test points (0 = all).
  Index max_test_points = 0;

  // Calibration gate.
  Index calibration_points = 20;
  double calibration_min_r = 0.9;

  // Attribution sweep.
  std::vector<AttributionMethod> methods = {
      AttributionMethod::kIP,  AttributionMethod::kEuc, AttributionMethod::kDot,
      AttributionMethod::kCos, AttributionMethod::kRif, AttributionMethod::kGd,
      AttributionMethod::kGc,  AttributionMethod::kRandom};
  std::vector<Index> k_grid = {10, 25, 50, 100};
  Index sweep_test_points = 50;

  FeatureKind feature_kind() const;
  // Throws InputError on invalid values; with check_paths also requires the
  // dataset file to exist.
  void validate(bool check_paths) const;
};

nlohmann::json to_json(const RunConfig& config);
// Missing keys keep their defaults; unknown keys are rejected.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace flipset

#endif  // FLIPSET_CONFIG_HPP_
