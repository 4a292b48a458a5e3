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

// MLM, GCV and SURE criteria from a single pass of the decoupled filter.
//
// With gamma = sigma^2, the innovations give
//   log|Sigma| = sum log E_{j,i},     Y^T Sigma^{-1} Y = sum e_{j,i}^2 / E_{j,i},
// and (S, delta) follow from the gamma-derivatives of those two sums:
//   delta = NM - gamma d(log|Sigma|)/d gamma,   S = -gamma^2 d(Y^T Sigma^{-1} Y)/d gamma.
// The derivatives are propagated per block through the filter recursion
// (zeta = d x_{j|j-1}/d gamma, Pdot = d P_{j|j-1}/d gamma, both zero at j = 1).

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stgp/error.hpp"
#include "stgp/kalman.hpp"
#include "stgp/parallel.hpp"
#include "stgp/stmodel.hpp"

namespace stgp {

enum class Method { MLM, GCV, SURE };

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::MLM: return "mlm";
    case Method::GCV: return "gcv";
    case Method::SURE: return "sure";
  }
  return "?";
}

inline Method method_from_string(std::string_view s) {
  if (s == "mlm") return Method::MLM;
  if (s == "gcv") return Method::GCV;
  if (s == "sure") return Method::SURE;
  throw ConfigError("unknown method '" + std::string(s) + "' (expected mlm, gcv or sure)");
}

struct CostReport {
  Method method = Method::MLM;
  double value = 0.0;
  double logdet = 0.0;
  double quad = 0.0;
  double S = 0.0;
  double delta = 0.0;
  std::size_t n_obs = 0;
  std::size_t floored = 0;  ///< innovation variances raised to the floor
};

namespace detail {

struct BlockSums {
  double logdet = 0.0, quad = 0.0, S = 0.0, dlogdet = 0.0;
  std::size_t n_obs = 0, floored = 0;
};

inline double floored_innov_var(double ev, double sigma2, std::size_t& floored, Eigen::Index i, Eigen::Index j) {
  if (!(ev > 0.0) || !std::isfinite(ev))
    throw NumericalError("non-positive innovation variance at block " + std::to_string(i) + ", step " +
                         std::to_string(j + 1));
  const double floor = sigma2 * 1e-12;
  if (ev < floor) {
    ++floored;
    return floor;
  }
  return ev;
}

/// One block: filter recursion plus, when `sensitivities`, the derivative
/// recursion w.r.t. gamma = sigma^2.
inline BlockSums run_block(const TransformedModel& model, const Eigen::MatrixXd& L, Eigen::Index i,
                           const MissingMask* missing, bool sensitivities) {
  const Realization& re = model.realization;
  const Eigen::Index n = L.cols(), r = model.state_dim();
  const double g = model.sigma2;
  const Eigen::RowVectorXd h = model.block_H(i);

  Eigen::VectorXd x = Eigen::VectorXd::Zero(r), xf(r);
  Eigen::MatrixXd p = re.init_cov, pf(r, r);
  Eigen::VectorXd zeta = Eigen::VectorXd::Zero(r), zf(r);
  Eigen::MatrixXd pdot = Eigen::MatrixXd::Zero(r, r), pdf(r, r);
  BlockSums s;

  for (Eigen::Index j = 0; j < n; ++j) {
    if (missing && (*missing)(i, j)) {
      xf = x;
      pf = p;
      zf = zeta;
      pdf = pdot;
    } else {
      const Eigen::VectorXd ph = p * h.transpose();
      const double e = L(i, j) - h.dot(x);
      const double ev = floored_innov_var(h.dot(ph) + g, g, s.floored, i, j);
      const Eigen::VectorXd k = ph / ev;
      ++s.n_obs;
      s.logdet += std::log(ev);
      s.quad += e * e / ev;

      if (sensitivities) {
        const Eigen::VectorXd pdh = pdot * h.transpose();
        const double edot = -h.dot(zeta);
        const double evdot = h.dot(pdh) + 1.0;
        // -d(e^2/E)/dgamma and d(log E)/dgamma
        s.S += e * e * evdot / (ev * ev) - 2.0 * e * edot / ev;
        s.dlogdet += evdot / ev;
        const Eigen::VectorXd kdot = pdh / ev - ph * (evdot / (ev * ev));
        zf = zeta + kdot * e + k * edot;
        pdf = pdot - (pdh * ph.transpose() + ph * pdh.transpose()) / ev + ph * ph.transpose() * (evdot / (ev * ev));
        symmetrize(pdf);
      }

      xf = x + k * e;
      Eigen::MatrixXd a = -k * h;
      a.diagonal().array() += 1.0;
      pf.noalias() = a * p * a.transpose();
      pf.noalias() += g * k * k.transpose();
      symmetrize(pf);
    }
    time_update(re, static_cast<std::size_t>(j + 1), xf, pf, x, p);
    if (sensitivities) {
      zeta.noalias() = re.F * zf;
      pdot.noalias() = re.F * pdf * re.F.transpose();
      symmetrize(pdot);
    }
  }
  return s;
}

inline BlockSums accumulate(const TransformedModel& model, const Eigen::MatrixXd& L, const MissingMask* missing,
                            bool sensitivities, int workers) {
  const Eigen::Index m = model.blocks();
  if (L.rows() != m) throw InputError("cost evaluation: L must have one row per block");
  if (missing && m != 1) throw InputError("cost evaluation: missing-data mask requires a single-block model");
  std::vector<BlockSums> per(static_cast<std::size_t>(m));
  parallel_for(per.size(), workers, [&](std::size_t i) {
    per[i] = run_block(model, L, static_cast<Eigen::Index>(i), missing, sensitivities);
  });
  BlockSums total;
  for (const auto& b : per) {  // fixed block order
    total.logdet += b.logdet;
    total.quad += b.quad;
    total.S += b.S;
    total.dlogdet += b.dlogdet;
    total.n_obs += b.n_obs;
    total.floored += b.floored;
  }
  return total;
}

}  // namespace detail

/// Negative log marginal likelihood.
inline CostReport mlm_cost(const TransformedModel& model, const Eigen::MatrixXd& L,
                           const MissingMask* missing = nullptr, int workers = 1) {
  const auto s = detail::accumulate(model, L, missing, false, workers);
  CostReport c;
  c.method = Method::MLM;
  c.logdet = s.logdet;
  c.quad = s.quad;
  c.n_obs = s.n_obs;
  c.floored = s.floored;
  c.value = 0.5 * (static_cast<double>(s.n_obs) * std::log(2.0 * std::numbers::pi) + s.logdet + s.quad);
  return c;
}

struct GcvSure {
  CostReport gcv, sure;
};

/// GCV and SURE at the model's (fixed) noise variance.
inline GcvSure gcv_sure_costs(const TransformedModel& model, const Eigen::MatrixXd& L, int workers = 1) {
  const auto s = detail::accumulate(model, L, nullptr, true, workers);
  const double g = model.sigma2;
  const double nm = static_cast<double>(s.n_obs);
  CostReport base;
  base.logdet = s.logdet;
  base.quad = s.quad;
  base.n_obs = s.n_obs;
  base.floored = s.floored;
  base.S = g * g * s.S;
  base.delta = nm - g * s.dlogdet;
  GcvSure out{base, base};
  out.gcv.method = Method::GCV;
  out.sure.method = Method::SURE;
  const double ratio = 1.0 - base.delta / nm;
  if (!(std::abs(ratio) > 1e-14)) throw NumericalError("GCV: degenerate fit (delta equals NM)");
  out.gcv.value = base.S / (nm * ratio * ratio);
  out.sure.value = base.S + 2.0 * g * base.delta;
  return out;
}

inline CostReport evaluate_cost(Method method, const TransformedModel& model, const Eigen::MatrixXd& L,
                                int workers = 1) {
  if (method == Method::MLM) {
    return mlm_cost(model, L, nullptr, workers);
  }
  auto gs = gcv_sure_costs(model, L, workers);
  return method == Method::GCV ? gs.gcv : gs.sure;
}

struct FiniteDiffDiagnostics {
  double dlogdet_fd = 0.0, dquad_fd = 0.0;          ///< central differences w.r.t. gamma
  double dlogdet_rec = 0.0, dquad_rec = 0.0;        ///< (NM - delta)/gamma and -S/gamma^2
  double rel_err_logdet = 0.0, rel_err_quad = 0.0;
  double delta = 0.0, S = 0.0;
};

/// Compares the sensitivity recursion with central differences of the
/// innovation sums at gamma +- h.
inline FiniteDiffDiagnostics finite_diff_check(const TransformedModel& model, const Eigen::MatrixXd& L, double h) {
  const double g = model.sigma2;
  if (!(g - h > 0.0)) throw ConfigError("finite_diff_check: gamma - h must stay positive");
  TransformedModel lo = model, hi = model;
  lo.sigma2 = g - h;
  hi.sigma2 = g + h;
  const auto clo = mlm_cost(lo, L), chi = mlm_cost(hi, L);
  const auto gs = gcv_sure_costs(model, L);
  FiniteDiffDiagnostics d;
  d.delta = gs.gcv.delta;
  d.S = gs.gcv.S;
  d.dlogdet_fd = (chi.logdet - clo.logdet) / (2.0 * h);
  d.dquad_fd = (chi.quad - clo.quad) / (2.0 * h);
  d.dlogdet_rec = (static_cast<double>(gs.gcv.n_obs) - d.delta) / g;
  d.dquad_rec = -d.S / (g * g);
  auto rel = [](double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); };
  d.rel_err_logdet = rel(d.dlogdet_fd, d.dlogdet_rec);
  d.rel_err_quad = rel(d.dquad_fd, d.dquad_rec);
  return d;
}

}  // namespace stgp
