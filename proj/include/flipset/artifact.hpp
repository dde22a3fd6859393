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

#ifndef FLIPSET_ARTIFACT_HPP_
#define FLIPSET_ARTIFACT_HPP_

#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"

#include "flipset/config.hpp"
#include "flipset/dataset.hpp"
#include "flipset/ingest.hpp"
#include "flipset/model.hpp"

namespace flipset {

struct Metrics {
  Index n_test = 0;
  double accuracy = 0;
  double f1 = 0;
  std::optional<double> auc;
};

// Test-split metrics with labels from the strict p > tau rule.
Metrics evaluate(const TrainedModel& model, const Dataset& test);
nlohmann::json to_json(const Metrics& metrics);

struct LoadedData {
  DatasetSplits splits;
  std::optional<Vocabulary> vocabulary;
};

LoadedData load_dataset(const RunConfig& config);

// Everything needed to answer queries about one trained model. The config
// stores an absolute dataset path so a saved bundle can be reopened from
// any working directory.
struct ModelBundle {
  RunConfig config;
  LoadedData data;
  TrainedModel model;
  Metrics metrics;
};

ModelBundle train_bundle(RunConfig config);

// Files: model.json (config, hyperparameters, diagnostics, metrics),
// theta.bin (little-endian float64 parameters) and, for bag-of-words data,
// vocab.json.
void save_bundle(const ModelBundle& bundle, const std::filesystem::path& dir);
ModelBundle load_bundle(const std::filesystem::path& dir);

nlohmann::json model_json(const ModelBundle& bundle);
std::string metrics_summary(const ModelBundle& bundle);

}  // namespace flipset

#endif  // FLIPSET_ARTIFACT_HPP_
