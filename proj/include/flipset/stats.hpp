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

#ifndef FLIPSET_STATS_HPP_
#define FLIPSET_STATS_HPP_

#include <optional>
#include <span>
#include <vector>

namespace flipset::stats {

double mean(std::span<const double> values);

// Undefined (nullopt) for fewer than two points or zero variance on either side.
std::optional<double> pearson(std::span<const double> a, std::span<const double> b);

// Pearson correlation of average ranks (ties share their mean rank).
std::optional<double> spearman(std::span<const double> a, std::span<const double> b);

std::vector<double> average_ranks(std::span<const double> values);

// Linear-interpolated quantile, q in [0, 1]. Requires nonempty input.
double quantile(std::vector<double> values, double q);

// Fraction of positions where sign(a) == sign(b), counting exact zeros as
// their own sign.
double sign_agreement(std::span<const double> a, std::span<const double> b);

// Area under the ROC curve via the rank statistic; nullopt if one class is absent.
std::optional<double> roc_auc(std::span<const double> scores, std::span<const int> labels);

}  // namespace flipset::stats

#endif  // FLIPSET_STATS_HPP_
