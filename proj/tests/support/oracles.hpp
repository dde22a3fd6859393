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

// Independent reference computations used by the tests. Nothing here calls
// the library's training or influence code.

#ifndef FLIPSET_TESTS_ORACLES_HPP_
#define FLIPSET_TESTS_ORACLES_HPP_

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "flipset/dataset.hpp"

namespace flipset::oracle {

inline double sigma(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Mean cross-entropy plus (lambda/2)|theta|^2, written with plain loops.
inline double risk(const Eigen::MatrixXd& x, const std::vector<int>& y, const Eigen::VectorXd& theta,
                   double lambda) {
  double acc = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double m = x.row(i).dot(theta);
    acc += std::log(1.0 + std::exp(m)) - y[static_cast<std::size_t>(i)] * m;
  }
  return acc / static_cast<double>(x.rows()) + 0.5 * lambda * theta.squaredNorm();
}

inline Eigen::VectorXd gradient(const Eigen::MatrixXd& x, const std::vector<int>& y,
                                const Eigen::VectorXd& theta, double lambda) {
  Eigen::VectorXd g = lambda * theta;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double r = sigma(x.row(i).dot(theta)) - y[static_cast<std::size_t>(i)];
    g += (r / static_cast<double>(x.rows())) * x.row(i).transpose();
  }
  return g;
}

// Nesterov accelerated gradient descent for the strongly convex risk, run
// until the gradient norm falls below tol.
inline Eigen::VectorXd minimize(const Eigen::MatrixXd& x, const std::vector<int>& y, double lambda,
                                double tol = 1e-10, int max_iter = 2000000) {
  const double smooth = lambda + 0.25 * x.squaredNorm() / static_cast<double>(x.rows());
  const double step = 1.0 / smooth;
  const double root_kappa = std::sqrt(smooth / lambda);
  const double momentum = (root_kappa - 1.0) / (root_kappa + 1.0);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(x.cols());
  Eigen::VectorXd previous = theta;
  for (int it = 0; it < max_iter; ++it) {
    const Eigen::VectorXd look = theta + momentum * (theta - previous);
    const Eigen::VectorXd g = gradient(x, y, look, lambda);
    previous = theta;
    theta = look - step * g;
    if (gradient(x, y, theta, lambda).norm() <= tol) break;
  }
  return theta;
}

// Central difference of a scalar function along each coordinate.
inline Eigen::VectorXd central_difference(const std::function<double(const Eigen::VectorXd&)>& f,
                                          const Eigen::VectorXd& at, double h) {
  Eigen::VectorXd out(at.size());
  for (Eigen::Index j = 0; j < at.size(); ++j) {
    Eigen::VectorXd up = at, down = at;
    up[j] += h;
    down[j] -= h;
    out[j] = (f(up) - f(down)) / (2 * h);
  }
  return out;
}

// Central difference Jacobian of a vector function (columns = directions).
inline Eigen::MatrixXd central_jacobian(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& at,
    double h) {
  const Eigen::Index n = at.size();
  Eigen::MatrixXd out(f(at).size(), n);
  for (Eigen::Index j = 0; j < n; ++j) {
    Eigen::VectorXd up = at, down = at;
    up[j] += h;
    down[j] -= h;
    out.col(j) = (f(up) - f(down)) / (2 * h);
  }
  return out;
}

// Relative error with an absolute floor for entries near zero.
inline double relative_error(const Eigen::VectorXd& got, const Eigen::VectorXd& want,
                             double floor = 1e-8) {
  return (got - want).norm() / std::max(want.norm(), floor);
}

// Random dense problem: Gaussian features (last column a constant 1 when
// with_bias) and labels drawn from a logistic model so both classes appear.
struct Problem {
  Eigen::MatrixXd x;
  std::vector<int> y;
  Dataset dataset() const { return Dataset::FromDense(x, y); }
  Dataset topRowsDataset(Eigen::Index n) const {
    return Dataset::FromDense(x.topRows(n), std::vector<int>(y.begin(), y.begin() + n));
  }
  Dataset bottomRowsDataset(Eigen::Index n) const {
    return Dataset::FromDense(x.bottomRows(n), std::vector<int>(y.end() - n, y.end()));
  }
};

inline Problem random_problem(std::mt19937_64& rng, Eigen::Index n, Eigen::Index d,
                              bool with_bias = true) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  Problem p;
  p.x.resize(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) p.x(i, j) = normal(rng);
  }
  if (with_bias) p.x.col(d - 1).setOnes();
  Eigen::VectorXd w(d);
  for (Eigen::Index j = 0; j < d; ++j) w[j] = normal(rng);
  do {
    p.y.clear();
    for (Eigen::Index i = 0; i < n; ++i) {
      p.y.push_back(uniform(rng) < sigma(p.x.row(i).dot(w)) ? 1 : 0);
    }
  } while (std::count(p.y.begin(), p.y.end(), 1) == 0 ||
           std::count(p.y.begin(), p.y.end(), 0) == 0);
  return p;
}

}  // namespace flipset::oracle

#endif  // FLIPSET_TESTS_ORACLES_HPP_
