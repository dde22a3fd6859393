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

#ifndef FLIPSET_FLIPSET_HPP_
#define FLIPSET_FLIPSET_HPP_

#include <Eigen/Dense>

#include <optional>
#include <string_view>
#include <vector>

#include "flipset/dataset.hpp"
#include "flipset/influence.hpp"
#include "flipset/model.hpp"

namespace flipset {

enum class Algorithm { kGreedy, kIterative };
enum class Verdict { kFlipped, kNotFlipped };

std::string_view to_string(Algorithm algorithm);
Algorithm parse_algorithm(std::string_view name);
std::string_view to_string(Verdict verdict);

inline constexpr int kDefaultMaxPasses = 25;

struct FlipsetResult {
  Index test_index = -1;
  double original_prob = 0.5;
  int original_label = 0;
  // Train indices in the order the search accumulated them; empty when no
  // subset was found.
  std::vector<Index> members;
  // Estimated removal delta of each member, aligned with `members`.
  std::vector<double> member_deltas;
  double estimated_prob = 0.5;
  Algorithm algorithm = Algorithm::kGreedy;
  int outer_passes = 1;
  std::optional<Verdict> verified;
  std::optional<double> retrained_prob;

  bool found() const { return !members.empty(); }
  Index k() const { return static_cast<Index>(members.size()); }
};

// Result of scanning prefixes of a sorted delta sequence.
struct PrefixCrossing {
  std::vector<Index> order;  // positions into the delta vector, sorted
  Index k = 0;               // shortest crossing prefix length; 0 if none
  double estimated_prob = 0;
};

// Sorts deltas so the most label-reversing come first (ascending when the
// original label is 1, descending otherwise) and finds the shortest prefix
// whose cumulative sum moves base_prob across tau under the strict
// "p > tau" labeling rule.
PrefixCrossing find_crossing(const Eigen::VectorXd& deltas, double base_prob, double tau,
                             int original_label);

// Runs both searches against one trained model, reusing the full-data
// Hessian factorization across test points.
class FlipsetSearcher {
 public:
  FlipsetSearcher(const TrainedModel& model, const Dataset& train);

  const InfluenceEngine& engine() const { return engine_; }

  FlipsetResult greedy(const Eigen::VectorXd& x_t, double tau, Index test_index = -1) const;

  FlipsetResult iterative(const Eigen::VectorXd& x_t, double tau,
                          int max_passes = kDefaultMaxPasses, Index test_index = -1) const;

  FlipsetResult run(Algorithm algorithm, const Eigen::VectorXd& x_t, double tau, int max_passes,
                    Index test_index = -1) const;

 private:
  const TrainedModel* model_;
  const Dataset* train_;
  InfluenceEngine engine_;
};

FlipsetResult greedy_flipset(const TrainedModel& model, const Dataset& train,
                             const Eigen::VectorXd& x_t, double tau, Index test_index = -1);

FlipsetResult iterative_flipset(const TrainedModel& model, const Dataset& train,
                                const Eigen::VectorXd& x_t, double tau,
                                int max_passes = kDefaultMaxPasses, Index test_index = -1);

}  // namespace flipset

#endif  // FLIPSET_FLIPSET_HPP_
