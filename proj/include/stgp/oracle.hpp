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

// Dense brute-force reference: builds Sigma = K_t (x) K_s + sigma^2 I
// explicitly and answers every question by direct linear algebra.
// O(N^3 M^3); intended for small verification instances only.

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stgp/error.hpp"
#include "stgp/kernels.hpp"

namespace stgp::oracle {

inline constexpr Eigen::Index kDefaultSizeGuard = 2000;

struct DenseProblem {
  Eigen::MatrixXd Kt;  ///< N x N
  Eigen::MatrixXd Ks;  ///< M x M
  double sigma2 = 1.0;
  Eigen::VectorXd Y;   ///< NM, stacked [y_1; ...; y_N]

  Eigen::Index N() const { return Kt.rows(); }
  Eigen::Index M() const { return Ks.rows(); }

  /// Stacks the columns of an M x N observation matrix.
  static Eigen::VectorXd stack(const Eigen::MatrixXd& y) {
    return Eigen::Map<const Eigen::VectorXd>(y.data(), y.size());
  }
};

inline void check_size(Eigen::Index nm, bool override_guard) {
  if (!override_guard && nm > kDefaultSizeGuard)
    throw InputError("dense oracle: N*M = " + std::to_string(nm) + " exceeds the size guard " +
                     std::to_string(kDefaultSizeGuard));
}

/// a (x) b with the time index outermost.
inline Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline Eigen::MatrixXd prior_cov(const DenseProblem& p) { return kron(p.Kt, p.Ks); }

inline Eigen::MatrixXd sigma(const DenseProblem& p) {
  Eigen::MatrixXd s = prior_cov(p);
  s.diagonal().array() += p.sigma2;
  return s;
}

struct MlmValues {
  double logdet = 0.0, quad = 0.0, cost = 0.0;
};

inline MlmValues dense_mlm(const DenseProblem& p, bool override_guard = false) {
  const Eigen::Index nm = p.N() * p.M();
  check_size(nm, override_guard);
  Eigen::LLT<Eigen::MatrixXd> llt(sigma(p));
  if (llt.info() != Eigen::Success) throw NumericalError("dense oracle: Sigma is not positive definite");
  MlmValues v;
  v.logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  const Eigen::VectorXd w = llt.matrixL().solve(p.Y);
  v.quad = w.squaredNorm();
  v.cost = 0.5 * (static_cast<double>(nm) * std::log(2.0 * std::numbers::pi) + v.logdet + v.quad);
  return v;
}

struct DeltaS {
  double delta = 0.0, S = 0.0;
  Eigen::VectorXd Yhat;
};

inline DeltaS dense_delta_S(const DenseProblem& p, bool override_guard = false) {
  check_size(p.N() * p.M(), override_guard);
  const Eigen::MatrixXd k = prior_cov(p);
  Eigen::MatrixXd s = k;
  s.diagonal().array() += p.sigma2;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(s);
  if (ldlt.info() != Eigen::Success) throw NumericalError("dense oracle: factorization failed");
  const Eigen::MatrixXd hat = ldlt.solve(k).transpose();  // K Sigma^{-1} (both symmetric)
  DeltaS out;
  out.delta = hat.trace();
  out.Yhat = hat * p.Y;
  out.S = (out.Yhat - p.Y).squaredNorm();
  return out;
}

struct Posterior {
  Eigen::MatrixXd mean;  ///< M x T
  Eigen::MatrixXd var;   ///< M x T marginal variances of the latent field
};

/// GP conditioning. `kt_all` is the temporal Gram over all T = N + N_T
/// samples; the first N are observed.
inline Posterior dense_posterior(const DenseProblem& p, const Eigen::MatrixXd& kt_all, bool override_guard = false) {
  const Eigen::Index n = p.N(), m = p.M(), t = kt_all.rows();
  check_size(t * m, override_guard);
  if (kt_all.cols() != t || t < n) throw InputError("dense_posterior: bad temporal Gram");
  Eigen::LDLT<Eigen::MatrixXd> ldlt(sigma(p));
  if (ldlt.info() != Eigen::Success) throw NumericalError("dense oracle: factorization failed");
  const Eigen::MatrixXd cross = kron(kt_all.leftCols(n), p.Ks);  // Tm x Nm
  const Eigen::VectorXd mean = cross * ldlt.solve(p.Y);
  const Eigen::MatrixXd reduced = cross * ldlt.solve(cross.transpose());
  Posterior out;
  out.mean = Eigen::Map<const Eigen::MatrixXd>(mean.data(), m, t);
  out.var.resize(m, t);
  for (Eigen::Index j = 0; j < t; ++j)
    for (Eigen::Index i = 0; i < m; ++i)
      out.var(i, j) = kt_all(j, j) * p.Ks(i, i) - reduced(j * m + i, j * m + i);
  return out;
}

/// Temporal Gram at t_j = j ts, j = 1..n. For the input-convolved DC family
/// K[j, j'] = sum_{k, k'} kappa(k, k') u(t_{j-k}) u(t_{j'-k'}) with
/// u(t) = e^{-alpha t} sin(omega0 t).
inline Eigen::MatrixXd temporal_gram(const TemporalKernelSpec& spec, Eigen::Index n, double ts = 1.0) {
  if (spec.family != TemporalFamily::DCInputConvolved) {
    std::vector<double> t(static_cast<std::size_t>(n));
    for (Eigen::Index j = 0; j < n; ++j) t[static_cast<std::size_t>(j)] = static_cast<double>(j + 1) * ts;
    return eval_temporal_gram(spec, t);
  }
  const double alpha = spec.get("input_alpha"), omega0 = spec.get("input_omega0");
  Eigen::MatrixXd kappa(n, n), u = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index k = 0; k < n; ++k)
    for (Eigen::Index kk = 0; kk < n; ++kk)
      kappa(k, kk) = eval_dc(spec.get("delta_t"), spec.get("lambda_t"), spec.get("rho_t"), double(k), double(kk));
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index k = 0; k < j; ++k) {
      const double t = static_cast<double>(j - k) * ts;
      u(j, k) = std::exp(-alpha * t) * std::sin(omega0 * t);
    }
  return u * kappa * u.transpose();
}

}  // namespace stgp::oracle
