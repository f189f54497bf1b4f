// Copyright 2026 The OrCo Authors
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

#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "orco/error.hpp"

namespace orco {

using Matrix2 = Eigen::Matrix2d;
using Vector2 = Eigen::Vector2d;
using Matrix3 = Eigen::Matrix3d;
using Matrix6 = Eigen::Matrix<double, 6, 6>;
using Vector6 = Eigen::Matrix<double, 6, 1>;

template <typename Derived>
bool is_symmetric(const Eigen::MatrixBase<Derived>& m, double rel_tol = 1e-12) {
  const double scale = std::max(m.cwiseAbs().maxCoeff(), 1e-300);
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

/// All eigenvalues >= -tol * trace.
template <typename Derived>
bool is_psd(const Eigen::MatrixBase<Derived>& m, double tol = 1e-10) {
  using M = Eigen::Matrix<double, Derived::RowsAtCompileTime, Derived::ColsAtCompileTime>;
  const M sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<M> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= -tol * std::fabs(sym.trace());
}

/// Symmetrize, clip negative eigenvalues to zero and reassemble. Throws
/// CholeskyFailure when clipping changes the trace by more than 1%.
template <typename Derived>
auto repair_psd(const Eigen::MatrixBase<Derived>& m) {
  using M = Eigen::Matrix<double, Derived::RowsAtCompileTime, Derived::ColsAtCompileTime>;
  const M sym = 0.5 * (m + m.transpose());
  if (!sym.allFinite()) throw Error(ErrorCode::CholeskyFailure, "covariance has non-finite entries");
  Eigen::SelfAdjointEigenSolver<M> es(sym);
  auto values = es.eigenvalues().eval();
  if (values.minCoeff() >= 0.0) return sym;
  const double trace_before = values.sum();
  values = values.cwiseMax(0.0);
  const double trace_after = values.sum();
  if (std::fabs(trace_after - trace_before) > 0.01 * std::fabs(trace_before)) {
    throw Error(ErrorCode::CholeskyFailure, "PSD repair changed the trace by more than 1% (" +
                                                std::to_string(trace_before) + " -> " + std::to_string(trace_after) +
                                                ")");
  }
  M out = es.eigenvectors() * values.asDiagonal() * es.eigenvectors().transpose();
  return M(0.5 * (out + out.transpose()));
}

/// Lower-triangular factor L with L L^T = m after PSD repair. Falls back to the
/// eigen square root when the repaired matrix is only semi-definite.
template <typename Derived>
auto covariance_factor(const Eigen::MatrixBase<Derived>& m) {
  using M = Eigen::Matrix<double, Derived::RowsAtCompileTime, Derived::ColsAtCompileTime>;
  const M repaired = repair_psd(m);
  Eigen::LLT<M> llt(repaired);
  if (llt.info() == Eigen::Success) return M(llt.matrixL());
  Eigen::SelfAdjointEigenSolver<M> es(repaired);
  return M(es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal());
}

}  // namespace orco
