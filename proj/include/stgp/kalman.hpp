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

// Decoupled Kalman filter, RTS smoother and predictor over the M independent
// blocks of a TransformedModel. Every block is an r-dimensional state with a
// scalar observation, so one time step costs O(M r^3) instead of O(M^3).

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stgp/error.hpp"
#include "stgp/parallel.hpp"
#include "stgp/stmodel.hpp"

namespace stgp {

using MissingMask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

namespace detail {

inline void symmetrize(Eigen::MatrixXd& p) { p = 0.5 * (p + p.transpose()).eval(); }

/// Measurement update in Joseph form for a scalar observation.
/// Returns the innovation variance.
inline double joseph_update(const Eigen::RowVectorXd& h, double sigma2, double innov, const Eigen::VectorXd& x,
                            const Eigen::MatrixXd& p, Eigen::VectorXd& xf, Eigen::MatrixXd& pf) {
  const Eigen::VectorXd ph = p * h.transpose();
  const double e_var = h.dot(ph) + sigma2;
  const Eigen::VectorXd k = ph / e_var;
  xf = x + k * innov;
  Eigen::MatrixXd a = -k * h;
  a.diagonal().array() += 1.0;
  pf.noalias() = a * p * a.transpose();
  pf.noalias() += sigma2 * k * k.transpose();
  symmetrize(pf);
  return e_var;
}

/// Time update x <- F x, P <- F P F^T + Q_j.
inline void time_update(const Realization& re, std::size_t j, const Eigen::VectorXd& xf, const Eigen::MatrixXd& pf,
                        Eigen::VectorXd& x, Eigen::MatrixXd& p) {
  x.noalias() = re.F * xf;
  p.noalias() = re.F * pf * re.F.transpose();
  p += re.process_cov(j);
  symmetrize(p);
}

/// Moore-Penrose inverse of a symmetric PSD matrix; eigenvalues below
/// 1e-12 * trace are treated as zero. Sets `singular` when any were dropped.
inline Eigen::MatrixXd psd_pinv(const Eigen::MatrixXd& p, bool& singular) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(p);
  const double tol = 1e-12 * std::max(p.trace(), std::numeric_limits<double>::min());
  Eigen::VectorXd inv = es.eigenvalues();
  singular = false;
  for (Eigen::Index k = 0; k < inv.size(); ++k) {
    if (inv(k) > tol) {
      inv(k) = 1.0 / inv(k);
    } else {
      inv(k) = 0.0;
      singular = true;
    }
  }
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

/// Clips negative eigenvalues (beyond -1e-10 trace they are an error upstream)
/// when a covariance lost definiteness to roundoff.
inline void repair_psd(Eigen::MatrixXd& p) {
  symmetrize(p);
  if ((p.diagonal().array() >= 0.0).all()) return;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(p);
  p = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace detail

/// Per-block filter sequences. Flat storage: state index (i * N + j) * r,
/// covariance index (i * N + j) * r * r, with j the 0-based sample.
struct FilterResult {
  Eigen::Index M = 0, N = 0, r = 0;
  Eigen::MatrixXd innov;      ///< M x N, NaN where masked
  Eigen::MatrixXd innov_var;  ///< M x N, NaN where masked
  std::vector<double> xpred, Ppred, xfilt, Pfilt;

  Eigen::Map<const Eigen::VectorXd> x_pred(Eigen::Index i, Eigen::Index j) const {
    return {xpred.data() + (i * N + j) * r, r};
  }
  Eigen::Map<const Eigen::MatrixXd> P_pred(Eigen::Index i, Eigen::Index j) const {
    return {Ppred.data() + (i * N + j) * r * r, r, r};
  }
  Eigen::Map<const Eigen::VectorXd> x_filt(Eigen::Index i, Eigen::Index j) const {
    return {xfilt.data() + (i * N + j) * r, r};
  }
  Eigen::Map<const Eigen::MatrixXd> P_filt(Eigen::Index i, Eigen::Index j) const {
    return {Pfilt.data() + (i * N + j) * r * r, r, r};
  }
};

/// Kalman filter over the transformed outputs L (M x N). A missing mask is
/// only accepted for a single-block model (per-location filling), since
/// Lambda^T mixes locations otherwise.
inline FilterResult filter_pass(const TransformedModel& model, const Eigen::MatrixXd& L,
                                const MissingMask* missing = nullptr, int workers = 1) {
  const Eigen::Index m = model.blocks(), n = L.cols(), r = model.state_dim();
  if (L.rows() != m) throw InputError("filter_pass: L must have one row per block");
  if (missing) {
    if (m != 1) throw InputError("filter_pass: missing-data mask requires a single-block model");
    if (missing->rows() != m || missing->cols() != n) throw InputError("filter_pass: mask shape mismatch");
  }
  FilterResult out;
  out.M = m;
  out.N = n;
  out.r = r;
  out.innov.setConstant(m, n, std::numeric_limits<double>::quiet_NaN());
  out.innov_var.setConstant(m, n, std::numeric_limits<double>::quiet_NaN());
  const std::size_t ns = static_cast<std::size_t>(m * n * r), nc = ns * r;
  out.xpred.assign(ns, 0.0);
  out.xfilt.assign(ns, 0.0);
  out.Ppred.assign(nc, 0.0);
  out.Pfilt.assign(nc, 0.0);

  const Realization& re = model.realization;
  parallel_for(static_cast<std::size_t>(m), workers, [&](std::size_t bi) {
    const auto i = static_cast<Eigen::Index>(bi);
    const Eigen::RowVectorXd h = model.block_H(i);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(r), xf(r);
    Eigen::MatrixXd p = re.init_cov, pf(r, r);
    for (Eigen::Index j = 0; j < n; ++j) {
      const Eigen::Index off = i * n + j;
      Eigen::Map<Eigen::VectorXd>(out.xpred.data() + off * r, r) = x;
      Eigen::Map<Eigen::MatrixXd>(out.Ppred.data() + off * r * r, r, r) = p;
      if (missing && (*missing)(i, j)) {
        xf = x;
        pf = p;
      } else {
        const double e = L(i, j) - h.dot(x);
        const double ev = detail::joseph_update(h, model.sigma2, e, x, p, xf, pf);
        if (!(ev > 0.0) || !std::isfinite(ev))
          throw NumericalError("non-positive innovation variance at block " + std::to_string(i) + ", step " +
                               std::to_string(j + 1));
        out.innov(i, j) = e;
        out.innov_var(i, j) = ev;
      }
      Eigen::Map<Eigen::VectorXd>(out.xfilt.data() + off * r, r) = xf;
      Eigen::Map<Eigen::MatrixXd>(out.Pfilt.data() + off * r * r, r, r) = pf;
      detail::time_update(re, static_cast<std::size_t>(j + 1), xf, pf, x, p);
    }
  });
  return out;
}

/// Smoothed or predicted posterior over a run of samples.
struct PosteriorField {
  Eigen::Index M = 0, T = 0, r = 0;
  Eigen::MatrixXd fhat;       ///< M x T posterior means of the latent field
  Eigen::MatrixXd field_var;  ///< M x T marginal posterior variances
  std::vector<double> xs;     ///< block means, index (i * T + j) * r
  std::vector<double> Ps;     ///< block covariances, index (i * T + j) * r * r
  std::size_t pinv_count = 0; ///< smoother steps that needed a pseudo-inverse

  Eigen::Map<const Eigen::VectorXd> x(Eigen::Index i, Eigen::Index j) const {
    return {xs.data() + (i * T + j) * r, r};
  }
  Eigen::Map<const Eigen::MatrixXd> P(Eigen::Index i, Eigen::Index j) const {
    return {Ps.data() + (i * T + j) * r * r, r, r};
  }
  /// Block states at sample j as an r x M matrix.
  Eigen::MatrixXd block_states(Eigen::Index j) const {
    Eigen::MatrixXd s(r, M);
    for (Eigen::Index i = 0; i < M; ++i) s.col(i) = x(i, j);
    return s;
  }
};

namespace detail {

/// Maps block means/covariances to the field: fhat = Lambda Z, var = (Lambda.^2) V.
inline void assemble_field(const TransformedModel& model, PosteriorField& pf) {
  Eigen::MatrixXd z(pf.M, pf.T), v(pf.M, pf.T);
  const Eigen::RowVectorXd& h = model.realization.H;
  for (Eigen::Index i = 0; i < pf.M; ++i) {
    for (Eigen::Index j = 0; j < pf.T; ++j) {
      z(i, j) = model.sqrt_d(i) * h.dot(pf.x(i, j));
      v(i, j) = model.d(i) * h * pf.P(i, j) * h.transpose();
    }
  }
  pf.fhat = model.Lambda * z;
  pf.field_var = (model.Lambda.array().square().matrix() * v).cwiseMax(0.0);
}

}  // namespace detail

/// RTS smoother over j = N..1.
inline PosteriorField smoother_pass(const TransformedModel& model, const FilterResult& fr, int workers = 1) {
  const Eigen::Index m = fr.M, n = fr.N, r = fr.r;
  PosteriorField out;
  out.M = m;
  out.T = n;
  out.r = r;
  out.xs.assign(static_cast<std::size_t>(m * n * r), 0.0);
  out.Ps.assign(static_cast<std::size_t>(m * n * r * r), 0.0);
  std::vector<std::size_t> pinv_counts(static_cast<std::size_t>(m), 0);
  const Eigen::MatrixXd& f = model.realization.F;

  parallel_for(static_cast<std::size_t>(m), workers, [&](std::size_t bi) {
    const auto i = static_cast<Eigen::Index>(bi);
    if (n == 0) return;
    Eigen::VectorXd xs = fr.x_filt(i, n - 1);
    Eigen::MatrixXd ps = fr.P_filt(i, n - 1);
    Eigen::Map<Eigen::VectorXd>(out.xs.data() + (i * n + n - 1) * r, r) = xs;
    Eigen::Map<Eigen::MatrixXd>(out.Ps.data() + (i * n + n - 1) * r * r, r, r) = ps;
    for (Eigen::Index j = n - 2; j >= 0; --j) {
      bool singular = false;
      const Eigen::MatrixXd pinv = detail::psd_pinv(fr.P_pred(i, j + 1), singular);
      if (singular) ++pinv_counts[bi];
      const Eigen::MatrixXd gain = fr.P_filt(i, j) * f.transpose() * pinv;
      Eigen::VectorXd xn = fr.x_filt(i, j) + gain * (xs - fr.x_pred(i, j + 1));
      Eigen::MatrixXd pn = fr.P_filt(i, j) + gain * (ps - fr.P_pred(i, j + 1)) * gain.transpose();
      detail::repair_psd(pn);
      xs = std::move(xn);
      ps = std::move(pn);
      Eigen::Map<Eigen::VectorXd>(out.xs.data() + (i * n + j) * r, r) = xs;
      Eigen::Map<Eigen::MatrixXd>(out.Ps.data() + (i * n + j) * r * r, r, r) = ps;
    }
  });
  for (auto c : pinv_counts) out.pinv_count += c;
  detail::assemble_field(model, out);
  return out;
}

/// Open-loop propagation from the last smoothed sample (index N) over
/// `horizon` further samples.
inline PosteriorField predictor_pass(const TransformedModel& model, const PosteriorField& smoothed,
                                     Eigen::Index horizon) {
  const Eigen::Index m = smoothed.M, n = smoothed.T, r = smoothed.r;
  if (n == 0) throw InputError("predictor_pass: empty smoother output");
  PosteriorField out;
  out.M = m;
  out.T = horizon;
  out.r = r;
  out.xs.assign(static_cast<std::size_t>(m * horizon * r), 0.0);
  out.Ps.assign(static_cast<std::size_t>(m * horizon * r * r), 0.0);
  if (horizon == 0) {
    out.fhat.resize(m, 0);
    out.field_var.resize(m, 0);
    return out;
  }
  const Realization& re = model.realization;
  for (Eigen::Index i = 0; i < m; ++i) {
    Eigen::VectorXd x = smoothed.x(i, n - 1), xn(r);
    Eigen::MatrixXd p = smoothed.P(i, n - 1), pn(r, r);
    for (Eigen::Index k = 0; k < horizon; ++k) {
      detail::time_update(re, static_cast<std::size_t>(n + k), x, p, xn, pn);
      x = xn;
      p = pn;
      Eigen::Map<Eigen::VectorXd>(out.xs.data() + (i * horizon + k) * r, r) = x;
      Eigen::Map<Eigen::MatrixXd>(out.Ps.data() + (i * horizon + k) * r * r, r, r) = p;
    }
  }
  detail::assemble_field(model, out);
  return out;
}

/// Prior covariance sequence Cov(s_j), j = 1..n, produced by the same time
/// update the filter uses.
inline std::vector<Eigen::MatrixXd> propagate_prior(const Realization& re, Eigen::Index n) {
  std::vector<Eigen::MatrixXd> out;
  out.reserve(static_cast<std::size_t>(n));
  Eigen::VectorXd x = Eigen::VectorXd::Zero(re.dim()), xn(re.dim());
  Eigen::MatrixXd p = re.init_cov, pn(re.dim(), re.dim());
  for (Eigen::Index j = 0; j < n; ++j) {
    out.push_back(p);
    detail::time_update(re, static_cast<std::size_t>(j + 1), x, p, xn, pn);
    x = xn;
    p = pn;
  }
  return out;
}

}  // namespace stgp
