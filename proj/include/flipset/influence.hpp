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

#ifndef FLIPSET_INFLUENCE_HPP_
#define FLIPSET_INFLUENCE_HPP_

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "flipset/dataset.hpp"
#include "flipset/linalg.hpp"
#include "flipset/model.hpp"

namespace flipset {

// Influence quantities follow the removal convention: a stored delta is the
// first-order estimate of how much a quantity changes when the training
// point is deleted and the model refit,
//
//   delta_i = (1/W) grad_q' H^{-1} grad_theta L(z_i, theta),
//
// where W is the (weighted) training-set size and grad_q the gradient of the
// quantity of interest. Summing deltas over a subset estimates the group
// removal effect.
inline constexpr std::string_view kRemovalConvention = "removal-effect/probability";

struct ParamInfluence {
  // train index -> H^{-1} grad L(z_i, theta)
  std::map<Index, Eigen::VectorXd> columns;
  Eigen::VectorXd base_theta;
  // theta_{-i} ~= base_theta + columns[i] / normalization
  double normalization = 1;
};

struct InfluenceVector {
  Index test_index = -1;
  Eigen::VectorXd deltas;
  std::string_view convention = kRemovalConvention;
};

enum class AttributionMethod { kIP, kIfLoss, kEuc, kDot, kCos, kRif, kGd, kGc, kRandom };

std::string_view to_string(AttributionMethod method);
AttributionMethod parse_attribution_method(std::string_view name);
const std::vector<AttributionMethod>& all_attribution_methods();

struct AttributionScores {
  AttributionMethod method = AttributionMethod::kIP;
  Eigen::VectorXd scores;
  std::optional<std::uint64_t> seed;
};

// Hessian factorization and per-row residuals of one (possibly reweighted)
// training objective at a fixed theta. Building one costs a Hessian
// assembly plus factorization; every influence query after that is a single
// SPD solve. The split must outlive the engine.
class InfluenceEngine {
 public:
  InfluenceEngine(const Dataset& train, Eigen::VectorXd theta, double lambda,
                  double solver_tol, const Eigen::VectorXd* weights = nullptr);
  InfluenceEngine(const TrainedModel& model, const Dataset& train);

  const Dataset& train() const { return *train_; }
  const Eigen::VectorXd& theta() const { return theta_; }
  double lambda() const { return lambda_; }
  // W, the divisor of the mean loss.
  double normalization() const { return normalization_; }
  // sigma(theta'x_i) - y_i for every row, weighted or not.
  const Eigen::VectorXd& residuals() const { return residuals_; }
  const SpdSolver<double>& solver() const { return solver_; }

  Eigen::VectorXd solve(const Eigen::VectorXd& b) const { return solver_.solve(b); }

  // (1/W) residual_i x_i' H^{-1} direction, for every row i.
  Eigen::VectorXd removal_effects(const Eigen::VectorXd& direction) const;

  // Removal effect of each training row on f(x_t). One SPD solve.
  Eigen::VectorXd prediction_deltas(const Eigen::VectorXd& x_t) const;

  // Removal effect of each training row on L(z_t). One SPD solve.
  Eigen::VectorXd loss_deltas(const Eigen::VectorXd& x_t, int y_t) const;

 private:
  const Dataset* train_;
  Eigen::VectorXd theta_;
  double lambda_;
  double normalization_;
  Eigen::VectorXd residuals_;
  SpdSolver<double> solver_;
};

ParamInfluence param_influence(const TrainedModel& model, const Dataset& train,
                               std::span<const Index> subset);

InfluenceVector prediction_influence(const TrainedModel& model, const Dataset& train,
                                     const Eigen::VectorXd& x_t, Index test_index = -1);

// Reference implementation with one solve per training point; used to check
// the single-solve route.
InfluenceVector prediction_influence_naive(const TrainedModel& model, const Dataset& train,
                                           const Eigen::VectorXd& x_t);

Eigen::VectorXd loss_influence(const TrainedModel& model, const Dataset& train,
                               const Eigen::VectorXd& x_t, int y_t);

// Scores where larger means "more responsible for the model's output on z_t".
// For IP the score is the removal delta signed so that positive values push
// the prediction away from label y_t; for IF_LOSS it is the removal increase
// of the loss at (x_t, y_t). Similarity methods ignore labels.
AttributionScores attribution(AttributionMethod method, const InfluenceEngine& engine,
                              const Eigen::VectorXd& x_t, int y_t, std::uint64_t seed = 0);

AttributionScores attribution(AttributionMethod method, const TrainedModel& model,
                              const Dataset& train, const Eigen::VectorXd& x_t, int y_t,
                              std::uint64_t seed = 0);

// cos(H^{-1/2} g_t, H^{-1/2} g_i) for every training row, where g_i is the
// row's loss gradient. Eigenvalues of H below eigen_floor are raised to it
// before the inverse square root.
Eigen::VectorXd relative_influence_scores(const Eigen::MatrixXd& hessian, double eigen_floor,
                                          const Dataset& train,
                                          const Eigen::VectorXd& residuals,
                                          const Eigen::VectorXd& test_grad);

// Cosine similarity, defined as 0 when either vector has zero norm.
double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// Stable argsort; ties keep ascending index order.
std::vector<Index> argsort(const Eigen::VectorXd& values, bool descending);

}  // namespace flipset

#endif  // FLIPSET_INFLUENCE_HPP_
