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

#include "flipset/influence.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cctype>
#include <numeric>
#include <random>
#include <string>

namespace flipset {

namespace {

struct MethodName {
  AttributionMethod method;
  std::string_view name;
};

constexpr MethodName kMethodNames[] = {
    {AttributionMethod::kIP, "IP"},       {AttributionMethod::kIfLoss, "IF_LOSS"},
    {AttributionMethod::kEuc, "EUC"},     {AttributionMethod::kDot, "DOT"},
    {AttributionMethod::kCos, "COS"},     {AttributionMethod::kRif, "RIF"},
    {AttributionMethod::kGd, "GD"},       {AttributionMethod::kGc, "GC"},
    {AttributionMethod::kRandom, "RANDOM"},
};

void check_test_vector(const Dataset& train, const Eigen::VectorXd& x_t) {
  if (x_t.size() != train.dimension()) {
    throw InputError("test vector has dimension " + std::to_string(x_t.size()) +
                     ", training data has " + std::to_string(train.dimension()));
  }
}

// Rows of the per-instance loss gradient matrix, diag(residuals) X.
Eigen::VectorXd row_norms_scaled(const Dataset& train, const Eigen::VectorXd& scale) {
  Eigen::VectorXd sq = train.features().cwiseAbs2() * Eigen::VectorXd::Ones(train.dimension());
  return (sq.array().sqrt() * scale.array().abs()).matrix();
}

}  // namespace

std::string_view to_string(AttributionMethod method) {
  for (const auto& entry : kMethodNames) {
    if (entry.method == method) return entry.name;
  }
  return "UNKNOWN";
}

AttributionMethod parse_attribution_method(std::string_view name) {
  std::string upper(name);
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  for (const auto& entry : kMethodNames) {
    if (entry.name == upper) return entry.method;
  }
  throw InputError("unknown attribution method '" + std::string(name) + "'");
}

const std::vector<AttributionMethod>& all_attribution_methods() {
  static const std::vector<AttributionMethod> methods = [] {
    std::vector<AttributionMethod> out;
    for (const auto& entry : kMethodNames) out.push_back(entry.method);
    return out;
  }();
  return methods;
}

double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return a.dot(b) / (na * nb);
}

std::vector<Index> argsort(const Eigen::VectorXd& values, bool descending) {
  std::vector<Index> order(static_cast<std::size_t>(values.size()));
  std::iota(order.begin(), order.end(), Index{0});
  if (descending) {
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return values[a] > values[b]; });
  } else {
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return values[a] < values[b]; });
  }
  return order;
}

InfluenceEngine::InfluenceEngine(const Dataset& train, Eigen::VectorXd theta, double lambda,
                                 double solver_tol, const Eigen::VectorXd* weights)
    : train_(&train),
      theta_(std::move(theta)),
      lambda_(lambda),
      normalization_(detail::weight_total(train, weights)),
      residuals_(flipset::residuals(train, theta_)),
      solver_(hessian_solver(train, theta_, lambda, solver_tol, weights)) {
  if (!(normalization_ > 0)) throw InputError("influence: no training rows carry weight");
}

InfluenceEngine::InfluenceEngine(const TrainedModel& model, const Dataset& train)
    : InfluenceEngine(train, model.theta, model.hyper.lambda, model.hyper.solver_tol) {}

Eigen::VectorXd InfluenceEngine::removal_effects(const Eigen::VectorXd& direction) const {
  const Eigen::VectorXd v = solve(direction);
  const Eigen::VectorXd xv = train_->features() * v;
  return residuals_.cwiseProduct(xv) / normalization_;
}

Eigen::VectorXd InfluenceEngine::prediction_deltas(const Eigen::VectorXd& x_t) const {
  check_test_vector(*train_, x_t);
  return removal_effects(prediction_gradient(theta_, x_t));
}

Eigen::VectorXd InfluenceEngine::loss_deltas(const Eigen::VectorXd& x_t, int y_t) const {
  check_test_vector(*train_, x_t);
  const double residual = sigmoid(theta_.dot(x_t)) - static_cast<double>(y_t);
  return removal_effects(residual * x_t);
}

ParamInfluence param_influence(const TrainedModel& model, const Dataset& train,
                               std::span<const Index> subset) {
  const InfluenceEngine engine(model, train);
  ParamInfluence out;
  out.base_theta = model.theta;
  out.normalization = engine.normalization();
  for (Index i : subset) {
    train.check_index(i);
    const Eigen::VectorXd grad =
        engine.residuals()[i] * dense_column<double>(train.row(i));
    out.columns.emplace(i, engine.solve(grad));
  }
  return out;
}

InfluenceVector prediction_influence(const TrainedModel& model, const Dataset& train,
                                     const Eigen::VectorXd& x_t, Index test_index) {
  const InfluenceEngine engine(model, train);
  return {test_index, engine.prediction_deltas(x_t), kRemovalConvention};
}

InfluenceVector prediction_influence_naive(const TrainedModel& model, const Dataset& train,
                                           const Eigen::VectorXd& x_t) {
  check_test_vector(train, x_t);
  const InfluenceEngine engine(model, train);
  const Eigen::VectorXd grad_f = prediction_gradient(model.theta, x_t);
  Eigen::VectorXd deltas(train.size());
  for (Index i = 0; i < train.size(); ++i) {
    const Eigen::VectorXd grad_l =
        engine.residuals()[i] * dense_column<double>(train.row(i));
    deltas[i] = grad_f.dot(engine.solve(grad_l)) / engine.normalization();
  }
  return {-1, std::move(deltas), kRemovalConvention};
}

Eigen::VectorXd loss_influence(const TrainedModel& model, const Dataset& train,
                               const Eigen::VectorXd& x_t, int y_t) {
  return InfluenceEngine(model, train).loss_deltas(x_t, y_t);
}

Eigen::VectorXd relative_influence_scores(const Eigen::MatrixXd& hessian, double eigen_floor,
                                          const Dataset& train,
                                          const Eigen::VectorXd& residuals,
                                          const Eigen::VectorXd& test_grad) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(hessian);
  if (eig.info() != Eigen::Success) {
    throw NumericalError("RIF: eigendecomposition of the Hessian failed");
  }
  const Eigen::VectorXd ev = eig.eigenvalues().cwiseMax(eigen_floor);
  const Eigen::MatrixXd inv_sqrt = eig.eigenvectors() *
                                   ev.cwiseSqrt().cwiseInverse().asDiagonal() *
                                   eig.eigenvectors().transpose();
  const Eigen::VectorXd white_test = inv_sqrt * test_grad;
  // x_i' H^{-1/2} for every row; the loss gradient adds the residual factor.
  const Eigen::MatrixXd white_rows = train.features() * inv_sqrt;
  Eigen::VectorXd scores(train.size());
  for (Index i = 0; i < train.size(); ++i) {
    const Eigen::VectorXd g = residuals[i] * white_rows.row(i).transpose();
    scores[i] = cosine(white_test, g);
  }
  return scores;
}

AttributionScores attribution(AttributionMethod method, const InfluenceEngine& engine,
                              const Eigen::VectorXd& x_t, int y_t, std::uint64_t seed) {
  const Dataset& train = engine.train();
  check_test_vector(train, x_t);
  const auto& x = train.features();
  const Index n = train.size();
  AttributionScores out{method, Eigen::VectorXd(n), std::nullopt};

  const double test_residual = sigmoid(engine.theta().dot(x_t)) - static_cast<double>(y_t);
  const Eigen::VectorXd test_grad = test_residual * x_t;

  switch (method) {
    case AttributionMethod::kIP: {
      const Eigen::VectorXd deltas = engine.prediction_deltas(x_t);
      out.scores = y_t == 1 ? Eigen::VectorXd(-deltas) : deltas;
      break;
    }
    case AttributionMethod::kIfLoss:
      out.scores = engine.loss_deltas(x_t, y_t);
      break;
    case AttributionMethod::kEuc: {
      const Eigen::VectorXd sq = x.cwiseAbs2() * Eigen::VectorXd::Ones(train.dimension());
      const Eigen::VectorXd dots = x * x_t;
      out.scores = -(sq - 2.0 * dots).array() - x_t.squaredNorm();
      // Clamp rounding residue so identical points score exactly 0.
      out.scores = out.scores.cwiseMin(0.0);
      break;
    }
    case AttributionMethod::kDot:
      out.scores = x * x_t;
      break;
    case AttributionMethod::kCos: {
      const Eigen::VectorXd norms = row_norms_scaled(train, Eigen::VectorXd::Ones(n));
      const Eigen::VectorXd dots = x * x_t;
      const double nt = x_t.norm();
      for (Index i = 0; i < n; ++i) {
        out.scores[i] = (norms[i] == 0.0 || nt == 0.0) ? 0.0 : dots[i] / (norms[i] * nt);
      }
      break;
    }
    case AttributionMethod::kGd:
      out.scores = engine.residuals().cwiseProduct(x * test_grad);
      break;
    case AttributionMethod::kGc: {
      const Eigen::VectorXd norms = row_norms_scaled(train, engine.residuals());
      const Eigen::VectorXd dots = engine.residuals().cwiseProduct(x * test_grad);
      const double nt = test_grad.norm();
      for (Index i = 0; i < n; ++i) {
        out.scores[i] = (norms[i] == 0.0 || nt == 0.0) ? 0.0 : dots[i] / (norms[i] * nt);
      }
      break;
    }
    case AttributionMethod::kRif: {
      if (!engine.solver().is_dense()) {
        throw InputError("RIF needs a dense Hessian (dimension <= " +
                         std::to_string(kDenseSolveLimit) + ")");
      }
      out.scores = relative_influence_scores(engine.solver().matrix(), 0.5 * engine.lambda(),
                                             train, engine.residuals(), test_grad);
      break;
    }
    case AttributionMethod::kRandom: {
      std::vector<Index> perm(static_cast<std::size_t>(n));
      std::iota(perm.begin(), perm.end(), Index{0});
      std::mt19937_64 rng(seed);
      std::shuffle(perm.begin(), perm.end(), rng);
      for (Index i = 0; i < n; ++i) out.scores[i] = static_cast<double>(perm[static_cast<std::size_t>(i)]);
      out.seed = seed;
      break;
    }
  }
  return out;
}

AttributionScores attribution(AttributionMethod method, const TrainedModel& model,
                              const Dataset& train, const Eigen::VectorXd& x_t, int y_t,
                              std::uint64_t seed) {
  return attribution(method, InfluenceEngine(model, train), x_t, y_t, seed);
}

}  // namespace flipset
