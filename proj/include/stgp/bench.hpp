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

// Reference implementation of the marginal likelihood without the spatial
// transform: the Kronecker-lifted state of dimension rM is filtered directly,
// with an M x M innovation covariance factored at every step. Cost O(N r^2 M^3).

#include <chrono>
#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "stgp/error.hpp"
#include "stgp/hyper.hpp"
#include "stgp/kernels.hpp"
#include "stgp/realize.hpp"
#include "stgp/stmodel.hpp"

namespace stgp::bench {

/// Negative log marginal likelihood of Y (M x N) under the lifted model
/// s_{j+1} = (F (x) I) s_j + w_j, Cov(w_j) = G G^T (x) K_s, y_j = (H (x) I) s_j + v_j.
inline double naive_mlm_cost(const Realization& re, const Eigen::MatrixXd& ks, double sigma2, const Eigen::MatrixXd& y) {
  const Eigen::Index m = ks.rows(), n = y.cols(), r = re.dim();
  if (y.rows() != m) throw InputError("naive_mlm_cost: Y must have one row per location");
  const Eigen::MatrixXd ggt = re.G * re.G.transpose();
  // block (a, b) of an rM x rM matrix
  auto blk = [m](Eigen::MatrixXd& p, Eigen::Index a, Eigen::Index b) { return p.block(a * m, b * m, m, m); };

  Eigen::MatrixXd p(r * m, r * m), tmp(r * m, r * m);
  for (Eigen::Index a = 0; a < r; ++a)
    for (Eigen::Index b = 0; b < r; ++b) blk(p, a, b) = re.init_cov(a, b) * ks;
  Eigen::VectorXd s = Eigen::VectorXd::Zero(r * m);
  Eigen::MatrixXd e(m, m), ph(r * m, m);
  double logdet = 0.0, quad = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    // innovation
    ph.setZero();
    for (Eigen::Index a = 0; a < r; ++a)
      for (Eigen::Index b = 0; b < r; ++b)
        if (re.H(b) != 0.0) ph.middleRows(a * m, m) += re.H(b) * blk(p, a, b);
    e.setZero();
    Eigen::VectorXd pred = Eigen::VectorXd::Zero(m);
    for (Eigen::Index a = 0; a < r; ++a) {
      if (re.H(a) == 0.0) continue;
      e += re.H(a) * ph.middleRows(a * m, m);
      pred += re.H(a) * s.segment(a * m, m);
    }
    e.diagonal().array() += sigma2;
    Eigen::LLT<Eigen::MatrixXd> llt(0.5 * (e + e.transpose()));
    if (llt.info() != Eigen::Success) throw NumericalError("naive filter: innovation covariance not positive definite");
    const Eigen::VectorXd innov = y.col(j) - pred;
    const Eigen::VectorXd w = llt.solve(innov);
    logdet += 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    quad += innov.dot(w);
    // measurement update
    const Eigen::MatrixXd gain = llt.solve(ph.transpose()).transpose();  // rM x M
    s += gain * innov;
    p.noalias() -= gain * ph.transpose();
    // time update
    Eigen::VectorXd sn = Eigen::VectorXd::Zero(r * m);
    tmp.setZero();
    for (Eigen::Index a = 0; a < r; ++a)
      for (Eigen::Index b = 0; b < r; ++b)
        if (re.F(a, b) != 0.0) {
          sn.segment(a * m, m) += re.F(a, b) * s.segment(b * m, m);
          tmp.middleRows(a * m, m) += re.F(a, b) * p.middleRows(b * m, m);
        }
    p.setZero();
    for (Eigen::Index a = 0; a < r; ++a)
      for (Eigen::Index b = 0; b < r; ++b)
        if (re.F(a, b) != 0.0) p.middleCols(a * m, m) += re.F(a, b) * tmp.middleCols(b * m, m);
    const double scale = re.noise_scale ? re.noise_scale(static_cast<std::size_t>(j + 1)) : 1.0;
    for (Eigen::Index a = 0; a < r; ++a)
      for (Eigen::Index b = 0; b < r; ++b)
        if (ggt(a, b) != 0.0) blk(p, a, b) += scale * ggt(a, b) * ks;
    p = 0.5 * (p + p.transpose()).eval();
    s = sn;
  }
  return 0.5 * (static_cast<double>(n * m) * std::log(2.0 * std::numbers::pi) + logdet + quad);
}

/// Synthetic benchmark problem: M random planar locations, standard normal Y.
struct Problem {
  Realization re;
  Eigen::MatrixXd locations, ks, y;
  double sigma2 = 0.5;
};

inline Problem make_problem(Eigen::Index n, Eigen::Index m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Problem pr;
  // r = 3: the input-convolved DC realization at its default input
  pr.re = realize(TemporalKernelSpec(TemporalFamily::DCInputConvolved,
                                     {{"delta_t", 1.0}, {"lambda_t", 0.9}, {"rho_t", 0.5}}),
                  1.0);
  pr.locations.resize(m, 2);
  for (Eigen::Index k = 0; k < pr.locations.size(); ++k) pr.locations.data()[k] = u(rng);
  SpatialKernelSpec sk;
  sk.alpha_se = 0.1;
  pr.ks = eval_spatial_gram(sk, pr.locations);
  pr.y.resize(m, n);
  for (Eigen::Index k = 0; k < pr.y.size(); ++k) pr.y.data()[k] = g(rng);
  return pr;
}

struct Timing {
  Eigen::Index N = 0, M = 0;
  double structured = 0.0;   ///< eigendecomposition + transform + cost, seconds
  double filter_core = 0.0;  ///< per-block filter and cost only
  double naive = std::numeric_limits<double>::quiet_NaN();
  double structured_cost = 0.0, naive_cost = std::numeric_limits<double>::quiet_NaN();
};

/// Minimum wall time over `reps` runs of each path.
inline Timing time_point(Eigen::Index n, Eigen::Index m, int reps, bool with_naive, std::uint64_t seed = 1) {
  using clock = std::chrono::steady_clock;
  const Problem pr = make_problem(n, m, seed);
  Timing t;
  t.N = n;
  t.M = m;
  t.structured = t.filter_core = t.naive = std::numeric_limits<double>::infinity();
  for (int k = 0; k < reps; ++k) {
    const auto t0 = clock::now();
    const TransformedModel model = build_transformed_model(pr.re, pr.ks, pr.sigma2);
    const Eigen::MatrixXd l = transform_outputs(model, pr.y);
    const auto t1 = clock::now();
    t.structured_cost = mlm_cost(model, l).value;
    const auto t2 = clock::now();
    t.structured = std::min(t.structured, std::chrono::duration<double>(t2 - t0).count());
    t.filter_core = std::min(t.filter_core, std::chrono::duration<double>(t2 - t1).count());
    if (with_naive) {
      const auto t3 = clock::now();
      t.naive_cost = naive_mlm_cost(pr.re, pr.ks, pr.sigma2, pr.y);
      t.naive = std::min(t.naive, std::chrono::duration<double>(clock::now() - t3).count());
    }
  }
  if (!with_naive) t.naive = std::numeric_limits<double>::quiet_NaN();
  return t;
}

}  // namespace stgp::bench
