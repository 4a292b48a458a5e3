/*
 * Copyright 2026 The stgp Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

// Kronecker lift of a per-location realization, rotated into M independent
// blocks by the eigenvectors of the spatial Gram matrix K_s = Lambda D Lambda^T.
//
// Block i evolves with the shared (F, G, init_cov) and observes
// l_{i,j} = sqrt(d_i) H x_{i,j} + noise, where l_j = Lambda^T y_j.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stgp/error.hpp"
#include "stgp/realize.hpp"

namespace stgp {

struct TransformedModel {
  Eigen::MatrixXd Lambda;  ///< M x M orthogonal
  Eigen::VectorXd d;       ///< eigenvalues of K_s, descending, clipped at 0
  Eigen::VectorXd sqrt_d;
  Realization realization;
  double sigma2 = 1.0;
  double ts = 1.0;

  Eigen::Index blocks() const { return d.size(); }
  Eigen::Index state_dim() const { return realization.dim(); }
  Eigen::RowVectorXd block_H(Eigen::Index i) const { return sqrt_d(i) * realization.H; }
};

/// Symmetric eigendecomposition with descending eigenvalues and the first
/// non-negligible entry of every eigenvector made positive.
inline void spatial_eigen(const Eigen::MatrixXd& ks, Eigen::MatrixXd& lambda, Eigen::VectorXd& d) {
  const Eigen::Index m = ks.rows();
  if (ks.cols() != m || m == 0) throw InputError("spatial Gram must be square and non-empty");
  if (!ks.allFinite()) throw InputError("spatial Gram has non-finite entries");
  const double scale = std::max(1.0, ks.cwiseAbs().maxCoeff());
  if ((ks - ks.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw InputError("spatial Gram is not symmetric");

  if (ks.isDiagonal(0.0)) {
    // exact, and fixes the basis when eigenvalues repeat (e.g. K_s = I)
    std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return ks(a, a) > ks(b, b); });
    lambda = Eigen::MatrixXd::Zero(m, m);
    d.resize(m);
    for (Eigen::Index k = 0; k < m; ++k) {
      const double ev = ks(order[k], order[k]);
      if (ev < 0.0) throw InputError("spatial Gram is not positive semidefinite (eigenvalue " + std::to_string(ev) + ")");
      d(k) = ev;
      lambda(order[k], k) = 1.0;
    }
    return;
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (ks + ks.transpose()));
  if (es.info() != Eigen::Success) throw NumericalError("spatial Gram eigendecomposition failed");
  const double trace = std::max(ks.trace(), 0.0);
  lambda.resize(m, m);
  d.resize(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    const Eigen::Index src = m - 1 - k;  // Eigen sorts ascending
    double ev = es.eigenvalues()(src);
    if (ev < 0.0) {
      if (ev < -1e-10 * std::max(trace, 1e-300))
        throw InputError("spatial Gram is not positive semidefinite (eigenvalue " + std::to_string(ev) + ")");
      ev = 0.0;
    }
    d(k) = ev;
    Eigen::VectorXd v = es.eigenvectors().col(src);
    const double tol = 1e-12 * v.cwiseAbs().maxCoeff();
    for (Eigen::Index r = 0; r < m; ++r) {
      if (std::abs(v(r)) > tol) {
        if (v(r) < 0.0) v = -v;
        break;
      }
    }
    lambda.col(k) = v;
  }
}

inline TransformedModel build_transformed_model(Realization realization, const Eigen::MatrixXd& ks,
                                                double sigma2, double ts = 1.0) {
  if (!(sigma2 >= 0.0) || !std::isfinite(sigma2)) throw ConfigError("noise variance must be finite and >= 0");
  TransformedModel model;
  spatial_eigen(ks, model.Lambda, model.d);
  model.sqrt_d = model.d.cwiseSqrt();
  model.realization = std::move(realization);
  model.sigma2 = sigma2;
  model.ts = ts;
  return model;
}

/// L = Lambda^T Y, column j is l_j.
inline Eigen::MatrixXd transform_outputs(const TransformedModel& model, const Eigen::MatrixXd& y) {
  if (y.rows() != model.blocks()) throw InputError("transform_outputs: row count must equal number of locations");
  if (y.hasNaN())
    throw MissingDataError("observations contain missing values; run fill-missing first");
  return model.Lambda.transpose() * y;
}

/// f = Lambda (sqrt(d_i) H x_i)_i for block states stacked as columns (r x M).
inline Eigen::VectorXd untransform_field(const TransformedModel& model, const Eigen::MatrixXd& block_states) {
  if (block_states.cols() != model.blocks() || block_states.rows() != model.state_dim())
    throw InputError("untransform_field: expected an r x M matrix of block states");
  Eigen::VectorXd z = (model.realization.H * block_states).transpose();
  return model.Lambda * z.cwiseProduct(model.sqrt_d);
}

}  // namespace stgp
