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

#ifndef FLIPSET_VERIFICATION_HPP_
#define FLIPSET_VERIFICATION_HPP_

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "flipset/dataset.hpp"
#include "flipset/flipset.hpp"
#include "flipset/influence.hpp"
#include "flipset/model.hpp"

namespace flipset {

// Exact refit on the training rows not in `removed`, from theta = 0, under
// the mean loss over the survivors with unchanged lambda. Throws DataError if
// nothing remains or if the removal leaves a single class behind.
TrainedModel retrain_without(const Dataset& train, std::span<const Index> removed,
                             const Hyperparams& hyper);

// Fills `verified` and `retrained_prob` by exact retraining. The label rule
// is the same strict p > tau used by the searches.
FlipsetResult verify_flip(FlipsetResult result, const Dataset& train,
                          const Eigen::VectorXd& x_t, const Hyperparams& hyper);

inline constexpr Index kBruteForceMaxTrain = 15;
inline constexpr int kBruteForceMaxK = 4;

// Smallest flipping subset of size <= max_k by exhaustive enumeration with
// exact retraining: cardinality first, then lexicographic order. Subsets
// whose removal leaves a single class are skipped. Guarded to N <= 15 and
// max_k <= 4.
std::optional<std::vector<Index>> brute_force_min_flipset(const Dataset& train,
                                                          const Eigen::VectorXd& x_t,
                                                          const Hyperparams& hyper, int max_k);

struct CalibrationPoint {
  Index test_index = -1;
  std::optional<double> pearson_r;
  double sign_agreement = 0;
  double mean_abs_estimated = 0;
  double mean_abs_actual = 0;
};

struct CalibrationReport {
  std::vector<CalibrationPoint> points;
  std::optional<double> mean_r;  // over points where r is defined
  double mean_sign_agreement = 0;
};

CalibrationPoint compare_deltas(Index test_index, std::span<const double> estimated,
                                std::span<const double> actual);

// Exact leave-one-out models, one per training row.
std::vector<TrainedModel> leave_one_out_models(const Dataset& train, const Hyperparams& hyper,
                                               int parallelism = 1);

// Per test point, correlates the removal deltas with the exact LOO change in
// predicted probability.
CalibrationReport loo_calibration(const TrainedModel& model, const Dataset& train,
                                  const Dataset& test, std::span<const Index> test_indices,
                                  int parallelism = 1);

enum class FeatureKind { kBow, kEmbedding, kSynthetic };
std::string_view to_string(FeatureKind kind);
FeatureKind parse_feature_kind(std::string_view name);

struct PointRecord {
  FlipsetResult result;
  std::optional<std::string> error;
};

struct ExperimentReport {
  std::string dataset_name;
  FeatureKind feature_kind = FeatureKind::kSynthetic;
  Algorithm algorithm = Algorithm::kGreedy;
  Index n_test = 0;
  Index found_count = 0;
  Index flipped_count = 0;
  Index error_count = 0;
  double found_rate = 0;
  // Unconditional: flipped / n_test.
  double flip_rate = 0;
  // Conditional: flipped / found; undefined with nothing found.
  std::optional<double> flip_rate_given_found;
  std::vector<Index> k_values;
  // (k, |p - 0.5|) per found set.
  std::vector<std::pair<Index, double>> k_vs_confidence;
  double mean_k = 0;
  double mean_outer_passes = 0;
  double wall_time_seconds = 0;
};

ExperimentReport summarize(std::string dataset_name, FeatureKind kind, Algorithm algorithm,
                           std::span<const PointRecord> records);

struct ExperimentOptions {
  Algorithm algorithm = Algorithm::kIterative;
  int max_passes = kDefaultMaxPasses;
  int parallelism = 1;
  bool verify = true;
  // Test indices to sweep; empty means the whole test split.
  std::vector<Index> test_indices;
};

struct ExperimentRun {
  std::vector<PointRecord> records;
  ExperimentReport report;
};

// Runs the chosen search over every selected test point and verifies each
// found set by retraining. Per-point failures are recorded, never thrown.
// Records in `resume` whose test_index is selected are reused as-is.
ExperimentRun run_experiment(const DatasetSplits& data, const std::string& dataset_name,
                             FeatureKind kind, const TrainedModel& model,
                             const ExperimentOptions& options,
                             std::span<const PointRecord> resume = {});

ExperimentRun run_experiment(const DatasetSplits& data, const std::string& dataset_name,
                             FeatureKind kind, const Hyperparams& hyper,
                             const ExperimentOptions& options);

struct SweepOptions {
  std::vector<AttributionMethod> methods;
  std::vector<Index> k_grid;
  std::vector<Index> test_indices;  // empty means all
  std::uint64_t seed = 0;
  int parallelism = 1;
};

struct AttributionSweepReport {
  std::vector<AttributionMethod> methods;
  std::vector<Index> k_grid;
  // mean_abs_delta[m][j]: mean over test points of |f_retrained - f| after
  // removing the top k_grid[j] points by methods[m].
  std::vector<std::vector<double>> mean_abs_delta;
  Index n_test = 0;

  const std::vector<double>& curve(AttributionMethod method) const;
};

// Each test point is scored against its own predicted label.
AttributionSweepReport attribution_sweep(const DatasetSplits& data, const TrainedModel& model,
                                         const SweepOptions& options);

}  // namespace flipset

#endif  // FLIPSET_VERIFICATION_HPP_
