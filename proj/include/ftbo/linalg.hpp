// Copyright 2026 The ftbo Authors. All Rights Reserved.
//
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
// =============================================================================

#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>

namespace ftbo {

using Eigen::MatrixXd;
using Eigen::VectorXd;

class CholeskyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Cholesky factor of a symmetric matrix plus whatever diagonal jitter it took
// to get there.
struct Cholesky {
  MatrixXd lower;
  double jitter = 0.0;

  Eigen::Index size() const { return lower.rows(); }

  double log_det() const {
    return 2.0 * lower.diagonal().array().log().sum();
  }

  // x = K^{-1} b
  template <typename Derived>
  MatrixXd solve(const Eigen::MatrixBase<Derived>& b) const {
    MatrixXd x = lower.triangularView<Eigen::Lower>().solve(b);
    lower.transpose().triangularView<Eigen::Upper>().solveInPlace(x);
    return x;
  }

  // x = L^{-1} b
  template <typename Derived>
  MatrixXd half_solve(const Eigen::MatrixBase<Derived>& b) const {
    return lower.triangularView<Eigen::Lower>().solve(b);
  }
};

inline constexpr double kJitterStart = 1e-10;
inline constexpr double kJitterMax = 1e-4;

// Tries the plain factorization first, then adds eps * mean(diag(K)) for
// eps = 1e-10, 1e-9, ..., 1e-4. Throws CholeskyError past that.
inline Cholesky jittered_cholesky(const MatrixXd& k) {
  if (k.rows() != k.cols()) {
    throw std::invalid_argument("jittered_cholesky: matrix is not square");
  }
  Cholesky out;
  if (k.rows() == 0) return out;
  if (!k.allFinite()) {
    throw CholeskyError("jittered_cholesky: non-finite matrix entries");
  }
  const double mean_diag = std::abs(k.diagonal().mean());
  double eps = 0.0;
  for (;;) {
    MatrixXd a = k;
    a.diagonal().array() += eps;
    Eigen::LLT<MatrixXd> llt(a);
    if (llt.info() == Eigen::Success && llt.matrixLLT().diagonal().minCoeff() > 0.0) {
      out.lower = llt.matrixL();
      out.jitter = eps;
      return out;
    }
    eps = (eps == 0.0) ? kJitterStart * mean_diag : eps * 10.0;
    if (eps > kJitterMax * mean_diag * (1.0 + 1e-12) || mean_diag == 0.0) {
      throw CholeskyError("jittered_cholesky: matrix of size " +
                          std::to_string(k.rows()) +
                          " not positive definite after maximum jitter");
    }
  }
}

// Square root S with S S^T = K for a symmetric PSD K. Falls back to a clipped
// eigendecomposition when the jittered Cholesky gives up (e.g. exact
// duplicates in a sampling covariance).
inline MatrixXd psd_sqrt(const MatrixXd& k) {
  try {
    return jittered_cholesky(k).lower;
  } catch (const CholeskyError&) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(k);
    VectorXd ev = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return eig.eigenvectors() * ev.asDiagonal();
  }
}

inline double min_eigenvalue(const MatrixXd& k) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(k, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

}  // namespace ftbo
