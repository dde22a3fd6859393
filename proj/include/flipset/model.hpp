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

#ifndef FLIPSET_MODEL_HPP_
#define FLIPSET_MODEL_HPP_

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "flipset/dataset.hpp"
#include "flipset/error.hpp"
#include "flipset/linalg.hpp"

// L2-regularized logistic regression:
//
//   R(theta) = (1/W) sum_i w_i L(z_i, theta) + (lambda/2) theta'theta
//
// with L the cross-entropy of sigma(theta'x_i) against y_i. Row weights w_i
// are 1 for ordinary training and 0/1 masks when points are removed; W is
// their sum, so a removal renormalizes the mean over the survivors. The bias
// is an ordinary (regularized) feature column appended by the featurizers.

namespace flipset {

template <typename Scalar>
struct BasicHyperparams {
  Scalar lambda = Scalar(0.1);
  Scalar tau = Scalar(0.5);
  Scalar newton_tol = Scalar(1e-8);
  int newton_max_iter = 100;
  Scalar solver_tol = Scalar(1e-8);

  void validate() const {
    if (!(lambda > Scalar(0))) throw InputError("lambda must be positive");
    if (!(tau > Scalar(0) && tau < Scalar(1))) {
      throw InputError("tau must lie in (0, 1)");
    }
    if (!(newton_tol > Scalar(0))) throw InputError("newton_tol must be positive");
    if (newton_max_iter < 1) throw InputError("newton_max_iter must be >= 1");
    if (!(solver_tol > Scalar(0))) throw InputError("solver_tol must be positive");
  }
};

template <typename Scalar>
struct BasicTrainedModel {
  Vector<Scalar> theta;
  BasicHyperparams<Scalar> hyper;
  Scalar final_grad_norm = 0;
  int iterations = 0;

  Index dimension() const { return theta.size(); }
};

using Hyperparams = BasicHyperparams<double>;
using TrainedModel = BasicTrainedModel<double>;

template <typename Scalar>
Scalar sigmoid(Scalar z) {
  if (z >= Scalar(0)) return Scalar(1) / (Scalar(1) + std::exp(-z));
  const Scalar e = std::exp(z);
  return e / (Scalar(1) + e);
}

// log(1 + e^z) without overflow.
template <typename Scalar>
Scalar log1p_exp(Scalar z) {
  if (z > Scalar(0)) return z + std::log1p(std::exp(-z));
  return std::log1p(std::exp(z));
}

template <typename Scalar>
Vector<Scalar> sigmoid(const Vector<Scalar>& z) {
  return z.unaryExpr([](Scalar v) { return sigmoid(v); });
}

namespace detail {

template <typename Scalar>
void check_dimension(Index got, Index want, const char* what) {
  if (got != want) {
    throw InputError(std::string(what) + ": dimension " + std::to_string(got) +
                     " does not match model dimension " + std::to_string(want));
  }
}

template <typename Scalar>
Scalar weight_total(const BasicDataset<Scalar>& split, const Vector<Scalar>* weights) {
  if (!weights) return static_cast<Scalar>(split.size());
  if (weights->size() != split.size()) {
    throw InputError("row weights length does not match dataset size");
  }
  return weights->sum();
}

}  // namespace detail

template <typename Scalar, typename Derived>
Scalar logit(const Vector<Scalar>& theta, const Eigen::MatrixBase<Derived>& x) {
  detail::check_dimension<Scalar>(x.size(), theta.size(), "logit");
  return theta.dot(x.derived());
}

template <typename Scalar, typename Derived>
Scalar logit(const Vector<Scalar>& theta, const Eigen::SparseMatrixBase<Derived>& x) {
  detail::check_dimension<Scalar>(x.size(), theta.size(), "logit");
  Scalar acc = 0;
  const auto& xd = x.derived();
  for (Index outer = 0; outer < xd.outerSize(); ++outer) {
    for (typename Derived::InnerIterator it(xd, outer); it; ++it) {
      acc += it.value() * theta[xd.rows() == 1 ? it.col() : it.row()];
    }
  }
  return acc;
}

template <typename Scalar, typename Derived>
Vector<Scalar> dense_column(const Eigen::MatrixBase<Derived>& x) {
  return Vector<Scalar>(x.derived().reshaped());
}

template <typename Scalar, typename Derived>
Vector<Scalar> dense_column(const Eigen::SparseMatrixBase<Derived>& x) {
  Vector<Scalar> out = Vector<Scalar>::Zero(x.size());
  const auto& xd = x.derived();
  for (Index outer = 0; outer < xd.outerSize(); ++outer) {
    for (typename Derived::InnerIterator it(xd, outer); it; ++it) {
      out[xd.rows() == 1 ? it.col() : it.row()] = it.value();
    }
  }
  return out;
}

// f(x) = sigma(theta'x), always strictly inside (0, 1) for finite logits.
template <typename Scalar, typename X>
Scalar predict_proba(const BasicTrainedModel<Scalar>& model, const X& x) {
  return sigmoid(logit(model.theta, x));
}

template <typename Scalar, typename X>
Scalar predict_proba(const Vector<Scalar>& theta, const X& x) {
  return sigmoid(logit(theta, x));
}

// Binary prediction under the strict rule proba > tau.
template <typename Scalar>
int predicted_label(Scalar proba, Scalar tau) {
  return proba > tau ? 1 : 0;
}

template <typename Scalar>
Scalar loss(const BasicInstance<Scalar>& z, const Vector<Scalar>& theta) {
  const Scalar m = logit(theta, z.features);
  return log1p_exp(m) - static_cast<Scalar>(z.label) * m;
}

// grad_theta L(z, theta) = (sigma(theta'x) - y) x
template <typename Scalar>
Vector<Scalar> loss_grad(const BasicInstance<Scalar>& z, const Vector<Scalar>& theta) {
  const Scalar residual = sigmoid(logit(theta, z.features)) - static_cast<Scalar>(z.label);
  return residual * dense_column<Scalar>(z.features);
}

// grad_theta f(x) = sigma (1 - sigma) x
template <typename Scalar, typename X>
Vector<Scalar> prediction_gradient(const Vector<Scalar>& theta, const X& x) {
  const Scalar p = sigmoid(logit(theta, x));
  return (p * (Scalar(1) - p)) * dense_column<Scalar>(x);
}

template <typename Scalar, typename X>
Vector<Scalar> prediction_gradient(const BasicTrainedModel<Scalar>& model, const X& x) {
  return prediction_gradient(model.theta, x);
}

// Per-row logits X theta.
template <typename Scalar>
Vector<Scalar> margins(const BasicDataset<Scalar>& split, const Vector<Scalar>& theta) {
  detail::check_dimension<Scalar>(theta.size(), split.dimension(), "margins");
  return split.features() * theta;
}

// Per-row sigma(theta'x_i) - y_i; the loss gradient of row i is residual_i x_i.
template <typename Scalar>
Vector<Scalar> residuals(const BasicDataset<Scalar>& split, const Vector<Scalar>& theta) {
  return sigmoid(margins(split, theta)) - split.labels();
}

template <typename Scalar>
Scalar risk(const BasicDataset<Scalar>& split, const Vector<Scalar>& theta,
            Scalar lambda, const Vector<Scalar>* weights = nullptr) {
  const Scalar total = detail::weight_total(split, weights);
  const Vector<Scalar> m = margins(split, theta);
  Scalar acc = 0;
  for (Index i = 0; i < m.size(); ++i) {
    const Scalar w = weights ? (*weights)[i] : Scalar(1);
    if (w == Scalar(0)) continue;
    acc += w * (log1p_exp(m[i]) - split.labels()[i] * m[i]);
  }
  return acc / total + Scalar(0.5) * lambda * theta.squaredNorm();
}

template <typename Scalar>
Vector<Scalar> risk_gradient(const BasicDataset<Scalar>& split, const Vector<Scalar>& theta,
                             Scalar lambda, const Vector<Scalar>* weights = nullptr) {
  const Scalar total = detail::weight_total(split, weights);
  Vector<Scalar> r = residuals(split, theta);
  if (weights) r = r.cwiseProduct(*weights);
  Vector<Scalar> g = split.features().transpose() * r;
  g /= total;
  g += lambda * theta;
  return g;
}

// Curvature weights s_i = w_i sigma_i (1 - sigma_i) / W.
template <typename Scalar>
Vector<Scalar> curvature_weights(const BasicDataset<Scalar>& split, const Vector<Scalar>& theta,
                                 const Vector<Scalar>* weights = nullptr) {
  const Scalar total = detail::weight_total(split, weights);
  const Vector<Scalar> p = sigmoid(margins(split, theta));
  Vector<Scalar> s = p.cwiseProduct((Scalar(1) - p.array()).matrix());
  if (weights) s = s.cwiseProduct(*weights);
  return s / total;
}

// H = (1/W) sum_i w_i sigma_i (1 - sigma_i) x_i x_i' + lambda I, dense.
template <typename Scalar>
Matrix<Scalar> risk_hessian(const BasicDataset<Scalar>& split, const Vector<Scalar>& theta,
                            Scalar lambda, const Vector<Scalar>* weights = nullptr) {
  if (split.empty()) throw InputError("risk_hessian: empty dataset");
  const Vector<Scalar> s = curvature_weights(split, theta, weights);
  const SparseRows<Scalar> scaled = s.cwiseSqrt().asDiagonal() * split.features();
  Matrix<Scalar> h = Matrix<Scalar>(scaled.transpose() * scaled);
  h.diagonal().array() += lambda;
  return h;
}

// A solver for the risk Hessian at theta: dense Cholesky up to
// kDenseSolveLimit columns, otherwise matrix-free PCG using
// H v = X'(s .* (X v)) + lambda v. The split must outlive the solver.
template <typename Scalar>
SpdSolver<Scalar> hessian_solver(const BasicDataset<Scalar>& split, const Vector<Scalar>& theta,
                                 Scalar lambda, Scalar tol,
                                 const Vector<Scalar>* weights = nullptr) {
  if (split.dimension() <= kDenseSolveLimit) {
    return SpdSolver<Scalar>::Dense(risk_hessian(split, theta, lambda, weights), tol);
  }
  Vector<Scalar> s = curvature_weights(split, theta, weights);
  Vector<Scalar> diagonal = split.features().cwiseAbs2().transpose() * s;
  diagonal.array() += lambda;
  const SparseRows<Scalar>* x = &split.features();
  auto apply = [x, s = std::move(s), lambda](const Vector<Scalar>& v, Vector<Scalar>& out) {
    const Vector<Scalar> xv = *x * v;
    out.noalias() = x->transpose() * s.cwiseProduct(xv);
    out += lambda * v;
  };
  return SpdSolver<Scalar>::MatrixFree(apply, std::move(diagonal), tol);
}

// Damped Newton from theta = 0 with Armijo backtracking (factor 1/2,
// sufficient decrease 1e-4). Deterministic: identical inputs give bitwise
// identical parameters. If `risk_trace` is given it receives R(theta_k) for
// every iterate.
template <typename Scalar>
BasicTrainedModel<Scalar> train(const BasicDataset<Scalar>& split,
                                const BasicHyperparams<Scalar>& hyper,
                                const Vector<Scalar>* weights = nullptr,
                                std::vector<Scalar>* risk_trace = nullptr) {
  hyper.validate();
  if (split.empty()) throw InputError("train: empty training split");
  if (detail::weight_total(split, weights) <= Scalar(0)) {
    throw InputError("train: no instances carry weight");
  }
  constexpr Scalar kArmijo = Scalar(1e-4);
  constexpr int kMaxHalvings = 60;

  Vector<Scalar> theta = Vector<Scalar>::Zero(split.dimension());
  Scalar current = risk(split, theta, hyper.lambda, weights);
  if (risk_trace) {
    risk_trace->clear();
    risk_trace->push_back(current);
  }
  Vector<Scalar> grad = risk_gradient(split, theta, hyper.lambda, weights);
  Scalar grad_norm = grad.norm();
  int iter = 0;
  for (; iter < hyper.newton_max_iter && grad_norm > hyper.newton_tol; ++iter) {
    const auto solver = hessian_solver(split, theta, hyper.lambda,
                                       std::min(hyper.solver_tol, Scalar(1e-10)), weights);
    const Vector<Scalar> step = -solver.solve(grad);
    const Scalar slope = grad.dot(step);
    // Rounding slack so steps taken at the noise floor are not rejected.
    const Scalar slack = Scalar(16) * std::numeric_limits<Scalar>::epsilon() *
                         std::max(Scalar(1), std::abs(current));
    Scalar t = 1;
    Vector<Scalar> candidate;
    Scalar next = 0;
    int halvings = 0;
    for (;; ++halvings) {
      candidate = theta + t * step;
      next = risk(split, candidate, hyper.lambda, weights);
      if (next <= current + kArmijo * t * slope + slack) break;
      if (halvings == kMaxHalvings) {
        std::ostringstream msg;
        msg << "train: line search failed at iteration " << iter
            << " (gradient norm " << grad_norm << ")";
        throw TrainingError(msg.str(), static_cast<double>(grad_norm), iter);
      }
      t *= Scalar(0.5);
    }
    theta = std::move(candidate);
    current = next;
    if (risk_trace) risk_trace->push_back(current);
    grad = risk_gradient(split, theta, hyper.lambda, weights);
    grad_norm = grad.norm();
  }
  if (!(grad_norm <= hyper.newton_tol)) {
    std::ostringstream msg;
    msg << "train: Newton did not converge in " << hyper.newton_max_iter
        << " iterations (gradient norm " << grad_norm << ", tolerance "
        << hyper.newton_tol << ")";
    throw TrainingError(msg.str(), static_cast<double>(grad_norm), iter);
  }
  return {std::move(theta), hyper, grad_norm, iter};
}

}  // namespace flipset

#endif  // FLIPSET_MODEL_HPP_
