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

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include "doctest.h"

#include "flipset/influence.hpp"
#include "flipset/stats.hpp"
#include "flipset/verification.hpp"
#include "oracles.hpp"

namespace flipset {
namespace {

std::vector<double> as_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

TrainedModel fit(const Dataset& data, double lambda) {
  Hyperparams h;
  h.lambda = lambda;
  return train(data, h);
}

// Actual change in f(x_t) when row i is removed and the model retrained.
Eigen::VectorXd loo_prediction_changes(const TrainedModel& model, const Dataset& data,
                                       const Eigen::VectorXd& x_t) {
  const double base = predict_proba(model, x_t);
  Eigen::VectorXd out(data.size());
  for (Index i = 0; i < data.size(); ++i) {
    const std::vector<Index> removed = {i};
    out[i] = predict_proba(retrain_without(data, removed, model.hyper), x_t) - base;
  }
  return out;
}

TEST_CASE("param_influence: zero-gradient row gives a zero column") {
  std::mt19937_64 rng(2);
  auto p = oracle::random_problem(rng, 10, 4);
  p.x.row(3).setZero();
  const auto data = p.dataset();
  const auto model = fit(data, 0.3);
  const std::vector<Index> subset = {3, 5};
  const auto infl = param_influence(model, data, subset);
  CHECK(infl.columns.at(3).isZero(0));
  CHECK(infl.columns.at(5).norm() > 0);
  CHECK(infl.columns.size() == 2);
}

TEST_CASE("param_influence: one-dimensional problem is scalar division") {
  Eigen::MatrixXd x(4, 1);
  x << 1.0, 2.0, -1.5, 0.5;
  const auto data = Dataset::FromDense(x, {1, 1, 0, 0});
  const auto model = fit(data, 0.4);
  const double h = risk_hessian(data, model.theta, 0.4)(0, 0);
  const std::vector<Index> all = {0, 1, 2, 3};
  const auto infl = param_influence(model, data, all);
  for (Index i = 0; i < 4; ++i) {
    const double grad = (oracle::sigma(x(i, 0) * model.theta[0]) - data.label(i)) * x(i, 0);
    CHECK(infl.columns.at(i)[0] == doctest::Approx(grad / h).epsilon(1e-12));
  }
}

double worst_loo_parameter_error(const Dataset& data, double lambda) {
  const auto model = fit(data, lambda);
  std::vector<Index> all(static_cast<std::size_t>(data.size()));
  std::iota(all.begin(), all.end(), Index{0});
  const auto infl = param_influence(model, data, all);
  double worst = 0;
  for (Index i : all) {
    const std::vector<Index> removed = {i};
    const Eigen::VectorXd loo = retrain_without(data, removed, model.hyper).theta;
    const Eigen::VectorXd approx = infl.base_theta + infl.columns.at(i) / infl.normalization;
    worst = std::max(worst, (approx - loo).norm() / loo.norm());
  }
  return worst;
}

// At N = 6 a single removal rescales the data term by N/(N-1) = 1.2, which the
// first-order 1/N estimate ignores; the measured error is 10-12% here, so the
// 10% bound is expected to miss. Kept so a change in behavior is noticed.
TEST_CASE("param_influence: 6-point leave-one-out parameters within 10%" * doctest::should_fail()) {
  Eigen::MatrixXd x(6, 3);
  x << 1.0, 0.5, 1, 0.8, 1.2, 1, 0.2, -0.3, 1, -0.9, -0.4, 1, -1.2, -1.0, 1, -0.1, 0.6, 1;
  CHECK(worst_loo_parameter_error(Dataset::FromDense(x, {1, 1, 0, 0, 0, 1}), 0.5) <= 0.10);
}

TEST_CASE("param_influence: leave-one-out parameters within 10% at N = 60") {
  std::mt19937_64 rng(1);
  const auto p = oracle::random_problem(rng, 60, 3);
  CHECK(worst_loo_parameter_error(p.dataset(), 0.5) <= 0.10);
}

TEST_CASE("param_influence: columns solve the Hessian system") {
  std::mt19937_64 rng(4);
  const auto p = oracle::random_problem(rng, 30, 5);
  const auto data = p.dataset();
  const auto model = fit(data, 0.1);
  const Eigen::MatrixXd h = risk_hessian(data, model.theta, 0.1);
  const std::vector<Index> subset = {0, 7, 19};
  const auto infl = param_influence(model, data, subset);
  for (Index i : subset) {
    const Eigen::VectorXd grad = oracle::gradient(p.x.row(i), {p.y[static_cast<std::size_t>(i)]},
                                                  model.theta, 0.0);
    CHECK((h * infl.columns.at(i) - grad).norm() <= model.hyper.solver_tol * grad.norm());
  }
}

TEST_CASE("prediction_influence: zero rows and zero test vectors") {
  std::mt19937_64 rng(6);
  auto p = oracle::random_problem(rng, 12, 4);
  p.x.row(2).setZero();
  const auto data = p.dataset();
  const auto model = fit(data, 0.2);
  const auto iv = prediction_influence(model, data, Eigen::VectorXd::Ones(4).eval(), 7);
  CHECK(iv.deltas[2] == 0.0);
  CHECK(iv.test_index == 7);
  CHECK(iv.deltas.size() == 12);
  CHECK(iv.convention == kRemovalConvention);
  CHECK(prediction_influence(model, data, Eigen::VectorXd::Zero(4).eval()).deltas.isZero(0));
}

TEST_CASE("prediction_influence: 8-point set tracks exact leave-one-out") {
  Eigen::MatrixXd x(8, 3);
  x << 1.2, 0.8, 1, 0.9, 1.4, 1, 1.6, 1.1, 1, 0.4, 0.2, 1,
      -1.1, -0.7, 1, -0.8, -1.3, 1, -1.5, -0.9, 1, 0.3, -0.4, 1;
  const auto data = Dataset::FromDense(x, {1, 1, 1, 0, 0, 0, 0, 1});
  const auto model = fit(data, 0.5);
  Eigen::VectorXd x_t(3);
  x_t << 0.3, 0.1, 1;
  const Eigen::VectorXd est = prediction_influence(model, data, x_t).deltas;
  const Eigen::VectorXd act = loo_prediction_changes(model, data, x_t);
  const auto r = stats::pearson(as_vector(est), as_vector(act));
  REQUIRE(r);
  CHECK(*r >= 0.95);
  CHECK(stats::sign_agreement(as_vector(est), as_vector(act)) >= 7.0 / 8.0);
}

TEST_CASE("prediction_influence: single solve agrees with one solve per row") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 5; ++trial) {
    const auto p = oracle::random_problem(rng, 25, 6);
    const auto data = p.dataset();
    const auto model = fit(data, 0.1);
    const Eigen::VectorXd x_t = Eigen::VectorXd::Random(6);
    const Eigen::VectorXd fast = prediction_influence(model, data, x_t).deltas;
    const Eigen::VectorXd slow = prediction_influence_naive(model, data, x_t).deltas;
    CHECK((fast - slow).cwiseAbs().maxCoeff() <= 10 * model.hyper.solver_tol);
  }
}

TEST_CASE("loss_influence: examples") {
  std::mt19937_64 rng(10);
  const auto p = oracle::random_problem(rng, 10, 3);
  const auto data = p.dataset();
  const auto model = fit(data, 0.5);
  CHECK(loss_influence(model, data, Eigen::VectorXd::Zero(3).eval(), 1).isZero(0));

  Eigen::MatrixXd x(3, 1);
  x << 1.0, -2.0, 0.5;
  const auto one_d = Dataset::FromDense(x, {1, 0, 0});
  const auto m1 = fit(one_d, 0.3);
  const double h = risk_hessian(one_d, m1.theta, 0.3)(0, 0);
  Eigen::VectorXd x_t(1);
  x_t << 0.7;
  const double gt = (oracle::sigma(0.7 * m1.theta[0]) - 1) * 0.7;
  const Eigen::VectorXd got = loss_influence(m1, one_d, x_t, 1);
  for (Index i = 0; i < 3; ++i) {
    const double gi = (oracle::sigma(x(i, 0) * m1.theta[0]) - one_d.label(i)) * x(i, 0);
    CHECK(got[i] == doctest::Approx(gt * gi / (3 * h)).epsilon(1e-10));
  }
}

TEST_CASE("loss_influence: signs match exact leave-one-out loss changes") {
  Eigen::MatrixXd x(8, 3);
  x << 1.2, 0.8, 1, 0.9, 1.4, 1, 1.6, 1.1, 1, 0.4, 0.2, 1,
      -1.1, -0.7, 1, -0.8, -1.3, 1, -1.5, -0.9, 1, 0.3, -0.4, 1;
  const auto data = Dataset::FromDense(x, {1, 1, 1, 0, 0, 0, 0, 1});
  const auto model = fit(data, 0.5);
  Eigen::VectorXd x_t(3);
  x_t << -0.2, 0.4, 1;
  const Instance z_t{0, x_t.sparseView(), 1, std::nullopt};
  const Eigen::VectorXd est = loss_influence(model, data, x_t, 1);
  std::vector<double> act;
  for (Index i = 0; i < 8; ++i) {
    const std::vector<Index> removed = {i};
    act.push_back(loss(z_t, retrain_without(data, removed, model.hyper).theta) - loss(z_t, model.theta));
  }
  CHECK(stats::sign_agreement(as_vector(est), act) >= 7.0 / 8.0);
}

TEST_CASE("attribution: similarity baselines") {
  std::mt19937_64 rng(12);
  const auto p = oracle::random_problem(rng, 15, 4);
  const auto data = p.dataset();
  const auto model = fit(data, 0.1);
  const Eigen::VectorXd x_t = p.x.row(6).transpose();
  const auto euc = attribution(AttributionMethod::kEuc, model, data, x_t, 1).scores;
  CHECK(euc[6] == 0.0);
  for (Index i = 0; i < 15; ++i) {
    if (i != 6) CHECK(euc[i] < euc[6]);
  }
  const auto cos = attribution(AttributionMethod::kCos, model, data, x_t, 1).scores;
  CHECK(cos[6] == doctest::Approx(1.0).epsilon(1e-12));
  const auto dot = attribution(AttributionMethod::kDot, model, data, x_t, 1).scores;
  CHECK(dot[3] == doctest::Approx(p.x.row(3).dot(x_t)));
}

TEST_CASE("attribution: RIF with identity Hessian equals GC") {
  std::mt19937_64 rng(14);
  const auto p = oracle::random_problem(rng, 20, 5);
  const auto data = p.dataset();
  const auto model = fit(data, 0.1);
  const InfluenceEngine engine(model, data);
  const Eigen::VectorXd x_t = Eigen::VectorXd::Random(5);
  const double rt = oracle::sigma(model.theta.dot(x_t)) - 0.0;
  const Eigen::VectorXd rif = relative_influence_scores(Eigen::MatrixXd::Identity(5, 5), 0.05,
                                                        data, engine.residuals(), rt * x_t);
  const Eigen::VectorXd gc = attribution(AttributionMethod::kGc, engine, x_t, 0).scores;
  CHECK((rif - gc).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("attribution: zero vectors score 0 under cosine methods") {
  std::mt19937_64 rng(16);
  auto p = oracle::random_problem(rng, 10, 3, /*with_bias=*/false);
  p.x.row(4).setZero();
  const auto data = p.dataset();
  const auto model = fit(data, 0.1);
  const Eigen::VectorXd x_t = Eigen::VectorXd::Ones(3);
  for (auto m : {AttributionMethod::kCos, AttributionMethod::kGc, AttributionMethod::kRif}) {
    const auto s = attribution(m, model, data, x_t, 1).scores;
    CHECK(s[4] == 0.0);
    CHECK(s.allFinite());
  }
  const auto s = attribution(AttributionMethod::kCos, model, data, Eigen::VectorXd::Zero(3).eval(), 1).scores;
  CHECK(s.isZero(0));
}

TEST_CASE("attribution: RANDOM is reproducible per seed") {
  std::mt19937_64 rng(18);
  const auto p = oracle::random_problem(rng, 30, 3);
  const auto data = p.dataset();
  const auto model = fit(data, 0.1);
  const Eigen::VectorXd x_t = Eigen::VectorXd::Ones(3);
  const auto a = attribution(AttributionMethod::kRandom, model, data, x_t, 1, 99);
  const auto b = attribution(AttributionMethod::kRandom, model, data, x_t, 1, 99);
  const auto c = attribution(AttributionMethod::kRandom, model, data, x_t, 1, 100);
  CHECK(a.scores == b.scores);
  CHECK(a.scores != c.scores);
  CHECK(a.seed == std::optional<std::uint64_t>(99));
  std::set<double> values(a.scores.data(), a.scores.data() + a.scores.size());
  CHECK(values.size() == 30);
}

TEST_CASE("attribution: IP score is the removal delta signed against the label") {
  std::mt19937_64 rng(20);
  const auto p = oracle::random_problem(rng, 20, 4);
  const auto data = p.dataset();
  const auto model = fit(data, 0.1);
  const Eigen::VectorXd x_t = Eigen::VectorXd::Random(4);
  const Eigen::VectorXd deltas = prediction_influence(model, data, x_t).deltas;
  CHECK(attribution(AttributionMethod::kIP, model, data, x_t, 1).scores.isApprox(-deltas));
  CHECK(attribution(AttributionMethod::kIP, model, data, x_t, 0).scores.isApprox(deltas));
  CHECK(attribution(AttributionMethod::kIfLoss, model, data, x_t, 1).scores.isApprox(
      loss_influence(model, data, x_t, 1)));
}

TEST_CASE("argsort: stable, and invariant to positive scaling") {
  Eigen::VectorXd v(6);
  v << 0.3, -0.1, 0.3, 0.0, -0.1, 2.0;
  CHECK(argsort(v, false) == std::vector<Index>{1, 4, 3, 0, 2, 5});
  CHECK(argsort(v, true) == std::vector<Index>{5, 0, 2, 3, 1, 4});
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> scale(1e-6, 1e6);
  const Eigen::VectorXd r = Eigen::VectorXd::Random(50);
  for (int trial = 0; trial < 10; ++trial) {
    const double c = scale(rng);
    CHECK(argsort(Eigen::VectorXd(c * r), false) == argsort(r, false));
    CHECK(argsort(Eigen::VectorXd(c * r), true) == argsort(r, true));
  }
}

TEST_CASE("group additivity: summed deltas track subset retrains") {
  std::mt19937_64 rng(24);
  const auto p = oracle::random_problem(rng, 40, 5);
  const auto data = p.dataset();
  const auto model = fit(data, 0.1);
  const Eigen::VectorXd x_t = p.x.row(0).transpose();
  const Eigen::VectorXd deltas = prediction_influence(model, data, x_t).deltas;
  const double base = predict_proba(model, x_t);
  std::vector<double> est, act;
  std::vector<Index> order(40);
  std::iota(order.begin(), order.end(), Index{0});
  std::uniform_int_distribution<int> size(1, 10);
  for (int s = 0; s < 50; ++s) {
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<Index> subset(order.begin(), order.begin() + size(rng));
    double sum = 0;
    for (Index i : subset) sum += deltas[i];
    est.push_back(sum);
    act.push_back(predict_proba(retrain_without(data, subset, model.hyper), x_t) - base);
  }
  const auto r = stats::pearson(est, act);
  REQUIRE(r);
  CHECK(*r >= 0.9);
}

TEST_CASE("attribution method names round-trip") {
  for (auto m : all_attribution_methods()) CHECK(parse_attribution_method(to_string(m)) == m);
  CHECK_THROWS_AS(parse_attribution_method("NOPE"), InputError);
}

}  // namespace
}  // namespace flipset
