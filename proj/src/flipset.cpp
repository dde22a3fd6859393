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

#include "flipset/flipset.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "flipset/error.hpp"

namespace flipset {

std::string_view to_string(Algorithm algorithm) {
  return algorithm == Algorithm::kGreedy ? "greedy" : "iterative";
}

Algorithm parse_algorithm(std::string_view name) {
  if (name == "greedy") return Algorithm::kGreedy;
  if (name == "iterative") return Algorithm::kIterative;
  throw InputError("unknown algorithm '" + std::string(name) +
                   "' (expected greedy or iterative)");
}

std::string_view to_string(Verdict verdict) {
  return verdict == Verdict::kFlipped ? "flipped" : "not_flipped";
}

PrefixCrossing find_crossing(const Eigen::VectorXd& deltas, double base_prob, double tau,
                             int original) {
  PrefixCrossing out;
  out.order = argsort(deltas, /*descending=*/original == 0);
  out.estimated_prob = base_prob;
  double cumulative = 0;
  for (std::size_t j = 0; j < out.order.size(); ++j) {
    cumulative += deltas[out.order[j]];
    if (predicted_label(base_prob + cumulative, tau) != original) {
      out.k = static_cast<Index>(j + 1);
      out.estimated_prob = base_prob + cumulative;
      return out;
    }
  }
  return out;
}

FlipsetSearcher::FlipsetSearcher(const TrainedModel& model, const Dataset& train)
    : model_(&model), train_(&train), engine_(model, train) {}

FlipsetResult FlipsetSearcher::greedy(const Eigen::VectorXd& x_t, double tau,
                                      Index test_index) const {
  FlipsetResult result;
  result.test_index = test_index;
  result.algorithm = Algorithm::kGreedy;
  result.original_prob = predict_proba(*model_, x_t);
  result.original_label = predicted_label(result.original_prob, tau);
  result.estimated_prob = result.original_prob;

  const Eigen::VectorXd deltas = engine_.prediction_deltas(x_t);
  const PrefixCrossing crossing =
      find_crossing(deltas, result.original_prob, tau, result.original_label);
  if (crossing.k == 0) return result;
  for (Index j = 0; j < crossing.k; ++j) {
    const Index i = crossing.order[static_cast<std::size_t>(j)];
    result.members.push_back(i);
    result.member_deltas.push_back(deltas[i]);
  }
  result.estimated_prob = crossing.estimated_prob;
  return result;
}

FlipsetResult FlipsetSearcher::iterative(const Eigen::VectorXd& x_t, double tau, int max_passes,
                                         Index test_index) const {
  if (max_passes < 1) throw InputError("max_passes must be >= 1");
  FlipsetResult result = greedy(x_t, tau, test_index);
  result.algorithm = Algorithm::kIterative;
  result.outer_passes = 1;
  const Index n = train_->size();
  if (!result.found()) return result;
  if (result.k() == n) {
    // Removing everything is not a usable answer.
    result.members.clear();
    result.member_deltas.clear();
    result.estimated_prob = result.original_prob;
    return result;
  }

  const double lambda = model_->hyper.lambda;
  const double tol = model_->hyper.solver_tol;
  Eigen::VectorXd theta = model_->theta;
  while (result.outer_passes < max_passes && result.k() > 1) {
    Eigen::VectorXd keep = Eigen::VectorXd::Ones(n);
    for (Index i : result.members) keep[i] = 0.0;

    // One Newton step on the reduced objective, from the previous estimate.
    const Eigen::VectorXd grad = risk_gradient(*train_, theta, lambda, &keep);
    const auto step_solver = hessian_solver(*train_, theta, lambda, tol, &keep);
    theta -= step_solver.solve(grad);
    if (!theta.allFinite()) {
      throw NumericalError("iterative flipset: reduced Newton step diverged at pass " +
                           std::to_string(result.outer_passes + 1));
    }

    // Removal deltas of the candidates against the reduced objective at the
    // updated parameters.
    const InfluenceEngine reduced(*train_, theta, lambda, tol, &keep);
    const Eigen::VectorXd all_deltas = reduced.prediction_deltas(x_t);
    // Candidates in ascending train index so delta ties resolve by index.
    std::vector<Index> candidates = result.members;
    std::sort(candidates.begin(), candidates.end());
    Eigen::VectorXd candidate_deltas(result.k());
    for (Index j = 0; j < result.k(); ++j) {
      candidate_deltas[j] = all_deltas[candidates[static_cast<std::size_t>(j)]];
    }
    ++result.outer_passes;

    // Anchor at the first-order estimate of f with the candidates added back.
    const double anchor = predict_proba(theta, x_t) - candidate_deltas.sum();
    const PrefixCrossing crossing =
        find_crossing(candidate_deltas, anchor, tau, result.original_label);
    if (crossing.k == 0 || crossing.k >= result.k()) break;

    std::vector<Index> members;
    std::vector<double> member_deltas;
    for (Index j = 0; j < crossing.k; ++j) {
      const Index pos = crossing.order[static_cast<std::size_t>(j)];
      members.push_back(candidates[static_cast<std::size_t>(pos)]);
      member_deltas.push_back(candidate_deltas[pos]);
    }
    result.members = std::move(members);
    result.member_deltas = std::move(member_deltas);
    result.estimated_prob = crossing.estimated_prob;
  }
  return result;
}

FlipsetResult FlipsetSearcher::run(Algorithm algorithm, const Eigen::VectorXd& x_t, double tau,
                                   int max_passes, Index test_index) const {
  return algorithm == Algorithm::kGreedy ? greedy(x_t, tau, test_index)
                                         : iterative(x_t, tau, max_passes, test_index);
}

FlipsetResult greedy_flipset(const TrainedModel& model, const Dataset& train,
                             const Eigen::VectorXd& x_t, double tau, Index test_index) {
  return FlipsetSearcher(model, train).greedy(x_t, tau, test_index);
}

FlipsetResult iterative_flipset(const TrainedModel& model, const Dataset& train,
                                const Eigen::VectorXd& x_t, double tau, int max_passes,
                                Index test_index) {
  return FlipsetSearcher(model, train).iterative(x_t, tau, max_passes, test_index);
}

}  // namespace flipset
