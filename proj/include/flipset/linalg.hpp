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

#ifndef FLIPSET_LINALG_HPP_
#define FLIPSET_LINALG_HPP_

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>

#include "flipset/dataset.hpp"
#include "flipset/error.hpp"

namespace flipset {

// Systems up to this size are factorized densely; larger ones go through
// Jacobi-preconditioned conjugate gradient.
inline constexpr Index kDenseSolveLimit = 2000;

template <typename Scalar>
struct SolveDiagnostics {
  Index iterations = 0;
  Scalar relative_residual = 0;
  bool dense = true;
};

template <typename Scalar>
Scalar relative_residual(const Vector<Scalar>& ax, const Vector<Scalar>& b) {
  const Scalar bn = b.norm();
  if (bn == Scalar(0)) return (ax - b).norm();
  return (ax - b).norm() / bn;
}

// Preconditioned conjugate gradient for A x = b with A symmetric positive
// definite. `apply(v, out)` must write A*v into out. Throws NumericalError on
// a non-positive curvature direction or when the relative residual does not
// fall below tol within max_iter steps.
template <typename Scalar, typename Apply>
Vector<Scalar> conjugate_gradient(Apply&& apply, const Vector<Scalar>& diagonal,
                                  const Vector<Scalar>& b, Scalar tol,
                                  Index max_iter,
                                  SolveDiagnostics<Scalar>* diag = nullptr) {
  const Index n = b.size();
  Vector<Scalar> x = Vector<Scalar>::Zero(n);
  const Scalar bn = b.norm();
  if (diag) *diag = {0, Scalar(0), false};
  if (bn == Scalar(0)) return x;

  const Vector<Scalar> inv_diag = diagonal.cwiseMax(
      std::numeric_limits<Scalar>::min()).cwiseInverse();
  Vector<Scalar> r = b;
  Vector<Scalar> z = inv_diag.cwiseProduct(r);
  Vector<Scalar> p = z;
  Vector<Scalar> ap(n);
  Scalar rz = r.dot(z);
  Scalar rel = Scalar(1);
  for (Index it = 0; it < max_iter; ++it) {
    apply(p, ap);
    const Scalar curvature = p.dot(ap);
    if (!(curvature > Scalar(0))) {
      std::ostringstream msg;
      msg << "conjugate gradient breakdown at iteration " << it
          << ": p'Ap = " << curvature << " (matrix not positive definite)";
      throw NumericalError(msg.str());
    }
    const Scalar alpha = rz / curvature;
    x.noalias() += alpha * p;
    r.noalias() -= alpha * ap;
    rel = r.norm() / bn;
    if (rel <= tol) {
      if (diag) *diag = {it + 1, rel, false};
      return x;
    }
    z = inv_diag.cwiseProduct(r);
    const Scalar rz_next = r.dot(z);
    p = z + (rz_next / rz) * p;
    rz = rz_next;
  }
  std::ostringstream msg;
  msg << "conjugate gradient did not converge in " << max_iter
      << " iterations (relative residual " << rel << ", tolerance " << tol
      << ")";
  throw NumericalError(msg.str());
}

// A reusable solver for one SPD system matrix. The dense route keeps a
// Cholesky factor so repeated right-hand sides cost O(d^2); the matrix-free
// route runs PCG against a user-supplied product.
template <typename Scalar>
class SpdSolver {
 public:
  using Apply = std::function<void(const Vector<Scalar>&, Vector<Scalar>&)>;

  static SpdSolver Dense(Matrix<Scalar> matrix, Scalar tol) {
    SpdSolver s;
    s.tol_ = tol;
    s.dim_ = matrix.rows();
    if (matrix.rows() != matrix.cols()) {
      throw InputError("solve_spd: matrix is not square");
    }
    s.llt_.compute(matrix);
    if (s.llt_.info() != Eigen::Success) {
      throw NumericalError(
          "solve_spd: Cholesky factorization failed (matrix not positive "
          "definite, dimension " + std::to_string(matrix.rows()) + ")");
    }
    s.matrix_ = std::move(matrix);
    return s;
  }

  static SpdSolver MatrixFree(Apply apply, Vector<Scalar> diagonal, Scalar tol) {
    SpdSolver s;
    s.tol_ = tol;
    s.dim_ = diagonal.size();
    s.apply_ = std::move(apply);
    s.diagonal_ = std::move(diagonal);
    return s;
  }

  Index dimension() const { return dim_; }
  bool is_dense() const { return matrix_.has_value(); }
  Scalar tolerance() const { return tol_; }

  // Only available on the dense route.
  const Matrix<Scalar>& matrix() const {
    if (!matrix_) throw InputError("solve_spd: no dense matrix on matrix-free route");
    return *matrix_;
  }

  void apply(const Vector<Scalar>& v, Vector<Scalar>& out) const {
    if (matrix_) {
      out.noalias() = *matrix_ * v;
    } else {
      apply_(v, out);
    }
  }

  Vector<Scalar> solve(const Vector<Scalar>& b,
                       SolveDiagnostics<Scalar>* diag = nullptr) const {
    if (b.size() != dim_) {
      throw InputError("solve_spd: right-hand side has dimension " +
                       std::to_string(b.size()) + ", expected " +
                       std::to_string(dim_));
    }
    if (!matrix_) {
      return conjugate_gradient<Scalar>(apply_, diagonal_, b, tol_,
                                        std::max<Index>(10 * dim_, 100), diag);
    }
    Vector<Scalar> x = llt_.solve(b);
    Vector<Scalar> ax = *matrix_ * x;
    Scalar rel = relative_residual<Scalar>(ax, b);
    if (rel > tol_) {
      // One step of iterative refinement.
      x += llt_.solve(b - ax);
      ax.noalias() = *matrix_ * x;
      rel = relative_residual<Scalar>(ax, b);
    }
    if (!std::isfinite(static_cast<double>(rel)) || rel > tol_) {
      std::ostringstream msg;
      msg << "solve_spd: relative residual " << rel << " exceeds tolerance "
          << tol_;
      throw NumericalError(msg.str());
    }
    if (diag) *diag = {1, rel, true};
    return x;
  }

 private:
  SpdSolver() = default;

  Index dim_ = 0;
  Scalar tol_ = Scalar(1e-8);
  std::optional<Matrix<Scalar>> matrix_;
  Eigen::LLT<Matrix<Scalar>> llt_;
  Apply apply_;
  Vector<Scalar> diagonal_;
};

// Solves H x = b for symmetric positive definite H with
// ||Hx - b|| / ||b|| <= tol. Dense Cholesky up to kDenseSolveLimit, PCG with
// a Jacobi preconditioner beyond.
template <typename Scalar>
Vector<Scalar> solve_spd(const Matrix<Scalar>& h, const Vector<Scalar>& b,
                         Scalar tol, SolveDiagnostics<Scalar>* diag = nullptr) {
  if (h.rows() != h.cols() || h.rows() != b.size()) {
    throw InputError("solve_spd: dimension mismatch");
  }
  if (h.rows() <= kDenseSolveLimit) {
    return SpdSolver<Scalar>::Dense(h, tol).solve(b, diag);
  }
  auto apply = [&h](const Vector<Scalar>& v, Vector<Scalar>& out) {
    out.noalias() = h.template selfadjointView<Eigen::Lower>() * v;
  };
  return conjugate_gradient<Scalar>(apply, h.diagonal(), b, tol,
                                    std::max<Index>(10 * h.rows(), 100), diag);
}

}  // namespace flipset

#endif  // FLIPSET_LINALG_HPP_
