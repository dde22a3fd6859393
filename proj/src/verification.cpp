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

#include "flipset/verification.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <string>

#include "flipset/error.hpp"
#include "flipset/parallel.hpp"
#include "flipset/stats.hpp"

namespace flipset {

namespace {

Eigen::VectorXd test_vector(const Dataset& test, Index i) {
  test.check_index(i);
  return dense_column<double>(test.row(i));
}

std::vector<Index> selected_indices(const Dataset& test, const std::vector<Index>& requested) {
  if (requested.empty()) {
    std::vector<Index> all(static_cast<std::size_t>(test.size()));
    std::iota(all.begin(), all.end(), Index{0});
    return all;
  }
  for (Index i : requested) test.check_index(i);
  return requested;
}

}  // namespace

TrainedModel retrain_without(const Dataset& train, std::span<const Index> removed,
                             const Hyperparams& hyper) {
  if (removed.empty()) return flipset::train(train, hyper);
  Eigen::VectorXd keep = Eigen::VectorXd::Ones(train.size());
  for (Index i : removed) {
    train.check_index(i);
    keep[i] = 0.0;
  }
  Index positives = 0;
  Index remaining = 0;
  for (Index i = 0; i < train.size(); ++i) {
    if (keep[i] == 0.0) continue;
    ++remaining;
    positives += train.label(i);
  }
  if (remaining == 0) {
    throw DataError("retrain: removing " + std::to_string(removed.size()) +
                    " points leaves no training data");
  }
  const Index total_positive = train.count_positive();
  const bool had_both = total_positive > 0 && total_positive < train.size();
  if (had_both && (positives == 0 || positives == remaining)) {
    throw DataError("retrain: remaining " + std::to_string(remaining) +
                    " training points are all of class " +
                    std::to_string(positives == 0 ? 0 : 1));
  }
  return flipset::train(train, hyper, &keep);
}

FlipsetResult verify_flip(FlipsetResult result, const Dataset& train,
                          const Eigen::VectorXd& x_t, const Hyperparams& hyper) {
  if (!result.found()) throw InputError("verify_flip: result has no members");
  const TrainedModel refit = retrain_without(train, result.members, hyper);
  const double prob = predict_proba(refit, x_t);
  result.retrained_prob = prob;
  result.verified = predicted_label(prob, hyper.tau) != result.original_label
                        ? Verdict::kFlipped
                        : Verdict::kNotFlipped;
  return result;
}

std::optional<std::vector<Index>> brute_force_min_flipset(const Dataset& train,
                                                          const Eigen::VectorXd& x_t,
                                                          const Hyperparams& hyper, int max_k) {
  const Index n = train.size();
  if (n > kBruteForceMaxTrain) {
    throw InputError("brute force search limited to " + std::to_string(kBruteForceMaxTrain) +
                     " training points, got " + std::to_string(n));
  }
  if (max_k < 1 || max_k > kBruteForceMaxK) {
    throw InputError("brute force max_k must be in [1, " + std::to_string(kBruteForceMaxK) +
                     "], got " + std::to_string(max_k));
  }
  const TrainedModel full = flipset::train(train, hyper);
  const int original = predicted_label(predict_proba(full, x_t), hyper.tau);

  for (int k = 1; k <= std::min<Index>(max_k, n - 1); ++k) {
    std::vector<Index> subset(static_cast<std::size_t>(k));
    std::iota(subset.begin(), subset.end(), Index{0});
    while (true) {
      try {
        const TrainedModel refit = retrain_without(train, subset, hyper);
        if (predicted_label(predict_proba(refit, x_t), hyper.tau) != original) return subset;
      } catch (const DataError&) {
        // Single-class remainder; not a valid counterfactual training set.
      }
      // Next combination in lexicographic order.
      int pos = k - 1;
      while (pos >= 0 && subset[static_cast<std::size_t>(pos)] == n - k + pos) --pos;
      if (pos < 0) break;
      ++subset[static_cast<std::size_t>(pos)];
      for (int j = pos + 1; j < k; ++j) {
        subset[static_cast<std::size_t>(j)] = subset[static_cast<std::size_t>(j - 1)] + 1;
      }
    }
  }
  return std::nullopt;
}

CalibrationPoint compare_deltas(Index test_index, std::span<const double> estimated,
                                std::span<const double> actual) {
  CalibrationPoint point;
  point.test_index = test_index;
  point.pearson_r = stats::pearson(estimated, actual);
  point.sign_agreement = stats::sign_agreement(estimated, actual);
  for (double v : estimated) point.mean_abs_estimated += std::abs(v);
  for (double v : actual) point.mean_abs_actual += std::abs(v);
  if (!estimated.empty()) {
    point.mean_abs_estimated /= static_cast<double>(estimated.size());
    point.mean_abs_actual /= static_cast<double>(actual.size());
  }
  return point;
}

std::vector<TrainedModel> leave_one_out_models(const Dataset& train, const Hyperparams& hyper,
                                               int parallelism) {
  std::vector<TrainedModel> models(static_cast<std::size_t>(train.size()));
  parallel_for(train.size(), parallelism, [&](Index i) {
    const Index removed[] = {i};
    models[static_cast<std::size_t>(i)] = retrain_without(train, removed, hyper);
  });
  return models;
}

CalibrationReport loo_calibration(const TrainedModel& model, const Dataset& train,
                                  const Dataset& test, std::span<const Index> test_indices,
                                  int parallelism) {
  const InfluenceEngine engine(model, train);
  const auto loo = leave_one_out_models(train, model.hyper, parallelism);
  CalibrationReport report;
  std::vector<double> rs;
  double sign_total = 0;
  for (Index t : test_indices) {
    const Eigen::VectorXd x_t = test_vector(test, t);
    const Eigen::VectorXd deltas = engine.prediction_deltas(x_t);
    const double base = predict_proba(model, x_t);
    std::vector<double> estimated(deltas.data(), deltas.data() + deltas.size());
    std::vector<double> actual(loo.size());
    for (std::size_t i = 0; i < loo.size(); ++i) actual[i] = predict_proba(loo[i], x_t) - base;
    auto point = compare_deltas(t, estimated, actual);
    if (point.pearson_r) rs.push_back(*point.pearson_r);
    sign_total += point.sign_agreement;
    report.points.push_back(point);
  }
  if (!rs.empty()) report.mean_r = stats::mean(rs);
  if (!report.points.empty()) {
    report.mean_sign_agreement = sign_total / static_cast<double>(report.points.size());
  }
  return report;
}

std::string_view to_string(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::kBow:
      return "bow";
    case FeatureKind::kEmbedding:
      return "embedding";
    case FeatureKind::kSynthetic:
      return "synthetic";
  }
  return "synthetic";
}

FeatureKind parse_feature_kind(std::string_view name) {
  if (name == "bow") return FeatureKind::kBow;
  if (name == "embedding") return FeatureKind::kEmbedding;
  if (name == "synthetic") return FeatureKind::kSynthetic;
  throw InputError("unknown feature kind '" + std::string(name) + "'");
}

ExperimentReport summarize(std::string dataset_name, FeatureKind kind, Algorithm algorithm,
                           std::span<const PointRecord> records) {
  ExperimentReport report;
  report.dataset_name = std::move(dataset_name);
  report.feature_kind = kind;
  report.algorithm = algorithm;
  report.n_test = static_cast<Index>(records.size());
  double passes = 0;
  double k_sum = 0;
  for (const auto& record : records) {
    if (record.error) {
      ++report.error_count;
      continue;
    }
    const auto& r = record.result;
    if (!r.found()) continue;
    ++report.found_count;
    if (r.verified == Verdict::kFlipped) ++report.flipped_count;
    report.k_values.push_back(r.k());
    report.k_vs_confidence.emplace_back(r.k(), std::abs(r.original_prob - 0.5));
    k_sum += static_cast<double>(r.k());
    passes += r.outer_passes;
  }
  if (report.n_test > 0) {
    report.found_rate = static_cast<double>(report.found_count) / static_cast<double>(report.n_test);
    report.flip_rate = static_cast<double>(report.flipped_count) / static_cast<double>(report.n_test);
  }
  if (report.found_count > 0) {
    const auto found = static_cast<double>(report.found_count);
    report.flip_rate_given_found = static_cast<double>(report.flipped_count) / found;
    report.mean_k = k_sum / found;
    report.mean_outer_passes = passes / found;
  }
  return report;
}

ExperimentRun run_experiment(const DatasetSplits& data, const std::string& dataset_name,
                             FeatureKind kind, const TrainedModel& model,
                             const ExperimentOptions& options,
                             std::span<const PointRecord> resume) {
  const auto started = std::chrono::steady_clock::now();
  const auto indices = selected_indices(data.test, options.test_indices);
  std::map<Index, const PointRecord*> previous;
  for (const auto& record : resume) previous.emplace(record.result.test_index, &record);

  const FlipsetSearcher searcher(model, data.train);
  std::vector<PointRecord> records(indices.size());
  parallel_for(static_cast<Index>(indices.size()), options.parallelism, [&](Index j) {
    const Index t = indices[static_cast<std::size_t>(j)];
    auto& record = records[static_cast<std::size_t>(j)];
    if (auto it = previous.find(t); it != previous.end()) {
      record = *it->second;
      return;
    }
    record.result.test_index = t;
    record.result.algorithm = options.algorithm;
    try {
      const Eigen::VectorXd x_t = test_vector(data.test, t);
      record.result = searcher.run(options.algorithm, x_t, model.hyper.tau,
                                   options.max_passes, t);
      if (options.verify && record.result.found()) {
        record.result = verify_flip(std::move(record.result), data.train, x_t, model.hyper);
      }
    } catch (const std::exception& e) {
      record.error = e.what();
    }
  });
  ExperimentRun run;
  run.report = summarize(dataset_name, kind, options.algorithm, records);
  run.report.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  run.records = std::move(records);
  return run;
}

ExperimentRun run_experiment(const DatasetSplits& data, const std::string& dataset_name,
                             FeatureKind kind, const Hyperparams& hyper,
                             const ExperimentOptions& options) {
  const TrainedModel model = train(data.train, hyper);
  return run_experiment(data, dataset_name, kind, model, options);
}

const std::vector<double>& AttributionSweepReport::curve(AttributionMethod method) const {
  for (std::size_t m = 0; m < methods.size(); ++m) {
    if (methods[m] == method) return mean_abs_delta[m];
  }
  throw InputError("method " + std::string(to_string(method)) + " not in sweep");
}

AttributionSweepReport attribution_sweep(const DatasetSplits& data, const TrainedModel& model,
                                         const SweepOptions& options) {
  if (options.methods.empty()) throw InputError("attribution sweep: no methods given");
  if (options.k_grid.empty()) throw InputError("attribution sweep: empty k grid");
  for (Index k : options.k_grid) {
    if (k < 0 || k >= data.train.size()) {
      throw InputError("attribution sweep: k = " + std::to_string(k) +
                       " outside [0, " + std::to_string(data.train.size()) + ")");
    }
  }
  const auto indices = selected_indices(data.test, options.test_indices);
  const std::size_t n_methods = options.methods.size();
  const std::size_t n_k = options.k_grid.size();
  const InfluenceEngine engine(model, data.train);

  // per_point[p][m * n_k + j]
  std::vector<std::vector<double>> per_point(indices.size(),
                                             std::vector<double>(n_methods * n_k, 0.0));
  parallel_for(static_cast<Index>(indices.size()), options.parallelism, [&](Index p) {
    const Index t = indices[static_cast<std::size_t>(p)];
    const Eigen::VectorXd x_t = test_vector(data.test, t);
    const double base = predict_proba(model, x_t);
    const int label = predicted_label(base, model.hyper.tau);
    for (std::size_t m = 0; m < n_methods; ++m) {
      const auto scores = attribution(options.methods[m], engine, x_t, label,
                                      options.seed + static_cast<std::uint64_t>(t));
      const auto order = argsort(scores.scores, /*descending=*/true);
      for (std::size_t j = 0; j < n_k; ++j) {
        const Index k = options.k_grid[j];
        const std::span<const Index> removed(order.data(), static_cast<std::size_t>(k));
        const TrainedModel refit = retrain_without(data.train, removed, model.hyper);
        per_point[static_cast<std::size_t>(p)][m * n_k + j] =
            std::abs(predict_proba(refit, x_t) - base);
      }
    }
  });

  AttributionSweepReport report;
  report.methods = options.methods;
  report.k_grid = options.k_grid;
  report.n_test = static_cast<Index>(indices.size());
  report.mean_abs_delta.assign(n_methods, std::vector<double>(n_k, 0.0));
  for (const auto& row : per_point) {
    for (std::size_t m = 0; m < n_methods; ++m) {
      for (std::size_t j = 0; j < n_k; ++j) report.mean_abs_delta[m][j] += row[m * n_k + j];
    }
  }
  if (!indices.empty()) {
    for (auto& curve : report.mean_abs_delta) {
      for (double& v : curve) v /= static_cast<double>(indices.size());
    }
  }
  return report;
}

}  // namespace flipset
