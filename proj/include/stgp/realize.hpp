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

// Discrete-time state-space realizations of temporal kernels.
//
// A realization (F, G, H, init_cov) describes
//
//   s_{j+1} = F s_j + G_j w_j,   z_j = H s_j,   Cov(s_1) = init_cov,
//
// with unit white noise w_j. For stationary kernels init_cov is the
// Lyapunov solution and Cov(z_{j+tau}, z_j) = H F^tau init_cov H^T = k(tau Ts).

#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stgp/error.hpp"
#include "stgp/kernels.hpp"

namespace stgp {

struct Realization {
  Eigen::MatrixXd F;         ///< r x r transition
  Eigen::MatrixXd G;         ///< r x m noise input (base value)
  Eigen::RowVectorXd H;      ///< 1 x r output row
  Eigen::MatrixXd init_cov;  ///< covariance of the state at the first sample
  /// Variance multiplier of the noise driving s_j -> s_{j+1} (j >= 1).
  /// Empty for time-invariant realizations.
  std::function<double(std::size_t)> noise_scale;

  Eigen::Index dim() const { return F.rows(); }
  bool time_varying() const { return static_cast<bool>(noise_scale); }

  /// G_j G_j^T for the transition leaving sample j (1-based).
  Eigen::MatrixXd process_cov(std::size_t j) const {
    Eigen::MatrixXd q = G * G.transpose();
    if (noise_scale) q *= noise_scale(j);
    return q;
  }
};

inline double spectral_radius(const Eigen::MatrixXd& f) {
  if (f.size() == 0) return 0.0;
  return f.eigenvalues().cwiseAbs().maxCoeff();
}

/// Solves S = F S F^T + G G^T by the doubling iteration
/// S_{k+1} = S_k + A_k S_k A_k^T, A_{k+1} = A_k^2.
inline Eigen::MatrixXd lyapunov_solve(const Eigen::MatrixXd& f, const Eigen::MatrixXd& g) {
  if (f.rows() != f.cols() || g.rows() != f.rows())
    throw InputError("lyapunov_solve: dimension mismatch");
  const double rho = spectral_radius(f);
  if (!(rho < 1.0))
    throw NumericalError("lyapunov_solve: spectral radius " + std::to_string(rho) + " >= 1");
  Eigen::MatrixXd s = g * g.transpose();
  Eigen::MatrixXd a = f;
  for (int it = 0; it < 200; ++it) {
    Eigen::MatrixXd inc = a * s * a.transpose();
    s += inc;
    a = a * a;
    if (inc.norm() <= 1e-18 * s.norm() && a.norm() < 1e-10) break;
  }
  // One refinement sweep on the residual of the fixed-point equation.
  Eigen::MatrixXd q = g * g.transpose();
  for (int it = 0; it < 2; ++it) {
    Eigen::MatrixXd resid = f * s * f.transpose() + q - s;
    Eigen::MatrixXd corr = resid;
    Eigen::MatrixXd b = f;
    for (int k = 0; k < 200; ++k) {
      Eigen::MatrixXd inc = b * corr * b.transpose();
      corr += inc;
      b = b * b;
      if (inc.norm() <= 1e-18 * (corr.norm() + 1e-300) && b.norm() < 1e-10) break;
    }
    s += corr;
  }
  return 0.5 * (s + s.transpose());
}

/// H F^tau P H^T.
inline double realized_covariance(const Realization& re, int tau) {
  Eigen::RowVectorXd hf = re.H;
  for (int k = 0; k < tau; ++k) hf = hf * re.F;
  return hf * re.init_cov * re.H.transpose();
}

/// c e^{-beta |tau|} with beta per sample.
inline Realization realize_exponential(double c, double beta) {
  if (!(c > 0.0) || !(beta > 0.0)) throw ConfigError("realize_exponential: need c > 0, beta > 0");
  Realization re;
  const double phi = std::exp(-beta);
  re.F = Eigen::MatrixXd::Constant(1, 1, phi);
  re.G = Eigen::MatrixXd::Ones(1, 1);
  re.H = Eigen::RowVectorXd::Constant(1, std::sqrt(c * -std::expm1(-2.0 * beta)));
  re.init_cov = lyapunov_solve(re.F, re.G);
  return re;
}

namespace detail {

/// Second-order realization of a stationary covariance sequence whose AR
/// polynomial is z^2 - d2 z - d1, i.e. k(t) - d2 k(t-1) - d1 k(t-2) = 0 for
/// t >= 2. The MA(1) numerator n1 z + n2 is found by spectral factorization
/// of the residual autocovariances (c0, c1):
///
///   n1^2 + n2^2 = c0,   n1 n2 = c1   =>   n1^4 - c0 n1^2 + c1^2 = 0.
///
/// Among the candidate roots the one with |zero| = |n2/n1| < 1 is kept,
/// ties broken by the smaller |zero|. Realized in controllable canonical form.
inline Realization realize_second_order(double d1, double d2, const std::function<double(int)>& k) {
  const double phi[3] = {1.0, -d2, -d1};
  auto resid_cov = [&](int h) {
    double acc = 0.0;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) acc += phi[a] * phi[b] * k(std::abs(h - a + b));
    return acc;
  };
  const double c0 = resid_cov(0);
  const double c1 = resid_cov(1);

  Realization re;
  re.F.resize(2, 2);
  re.F << 0.0, 1.0, d1, d2;
  re.G.resize(2, 1);
  re.G << 0.0, 1.0;
  re.H.resize(2);

  if (c0 <= 0.0 && std::abs(c1) <= 0.0) {
    re.H.setZero();
  } else {
    double disc = c0 * c0 - 4.0 * c1 * c1;
    if (disc < 0.0) {
      if (disc < -1e-10 * c0 * c0)
        throw NumericalError("spectral factorization: negative discriminant (kernel not PSD?)");
      disc = 0.0;
    }
    const double sq = std::sqrt(disc);
    double best_zero = std::numeric_limits<double>::infinity();
    double n1 = 0.0, n2 = 0.0;
    for (double n1sq : {(c0 + sq) / 2.0, (c0 - sq) / 2.0}) {
      if (!(n1sq > 0.0)) continue;
      const double cand1 = std::sqrt(n1sq);
      const double cand2 = c1 / cand1;
      const double zero = std::abs(cand2 / cand1);
      if (zero < 1.0 && zero < best_zero) {
        best_zero = zero;
        n1 = cand1;
        n2 = cand2;
      }
    }
    if (!std::isfinite(best_zero))
      throw NumericalError("spectral factorization: no minimum-phase factor");
    re.H << n2, n1;
  }
  if (!(spectral_radius(re.F) < 1.0)) throw NumericalError("spectral factorization: unstable poles");
  re.init_cov = lyapunov_solve(re.F, re.G);
  return re;
}

inline Realization block_diagonal(const std::vector<Realization>& parts) {
  Eigen::Index r = 0, m = 0;
  for (const auto& p : parts) {
    r += p.dim();
    m += p.G.cols();
  }
  Realization re;
  re.F = Eigen::MatrixXd::Zero(r, r);
  re.G = Eigen::MatrixXd::Zero(r, m);
  re.H = Eigen::RowVectorXd::Zero(r);
  re.init_cov = Eigen::MatrixXd::Zero(r, r);
  Eigen::Index o = 0, c = 0;
  for (const auto& p : parts) {
    const auto n = p.dim();
    re.F.block(o, o, n, n) = p.F;
    re.G.block(o, c, n, p.G.cols()) = p.G;
    re.H.segment(o, n) = p.H;
    re.init_cov.block(o, o, n, n) = p.init_cov;
    o += n;
    c += p.G.cols();
  }
  return re;
}

}  // namespace detail

/// amplitude * cos(varrho tau) e^{-beta |tau|}, varrho and beta per sample.
/// A zero amplitude yields the same 2-state block with a zero output row.
inline Realization realize_cosine_exponential(double amplitude, double varrho, double beta) {
  if (!(amplitude >= 0.0) || !(beta > 0.0))
    throw ConfigError("realize_cosine_exponential: need amplitude >= 0, beta > 0");
  const double d1 = -std::exp(-2.0 * beta);
  const double d2 = 2.0 * std::exp(-beta) * std::cos(varrho);
  return detail::realize_second_order(d1, d2, [&](int t) {
    return amplitude * std::cos(varrho * t) * std::exp(-beta * t);
  });
}

/// Matern-3/2 kernel sampled at interval Ts. The sampled sequence
/// h (1 + a t) e^{-a t}, a = sqrt(3) Ts / theta, satisfies the AR(2)
/// recursion with a double pole at e^{-a}.
inline Realization realize_matern32(double h, double theta, double ts) {
  if (!(h > 0.0) || !(theta > 0.0) || !(ts > 0.0))
    throw ConfigError("realize_matern32: need h, theta, Ts > 0");
  const double a = std::sqrt(3.0) * ts / theta;
  const double p = std::exp(-a);
  return detail::realize_second_order(-p * p, 2.0 * p, [&](int t) { return h * (1.0 + a * t) * std::exp(-a * t); });
}

/// TE2Exp, TE2Exp + Matern and PD as block-diagonal stacks.
inline Realization realize_composite(const TemporalKernelSpec& spec, double ts) {
  spec.validate();
  if (!(ts > 0.0)) throw ConfigError("realize_composite: Ts must be > 0");
  switch (spec.family) {
    case TemporalFamily::TE2Exp:
    case TemporalFamily::TE2ExpPlusMatern: {
      const double delta = spec.get("delta_t"), c = spec.get("c_t");
      const double beta = ts / spec.get("sigma_t");
      const double w = 2.0 * std::numbers::pi * spec.get("f") * ts;
      std::vector<Realization> parts;
      parts.push_back(realize_exponential(delta * (1.0 - c + 0.75 * c * c), beta));
      parts.push_back(realize_cosine_exponential(delta * (c - c * c), w, beta));
      parts.push_back(realize_cosine_exponential(delta * c * c / 4.0, 2.0 * w, beta));
      if (spec.family == TemporalFamily::TE2ExpPlusMatern)
        parts.push_back(realize_matern32(spec.get("h_t"), spec.get("theta_t"), ts));
      return detail::block_diagonal(parts);
    }
    case TemporalFamily::PD:
      return realize_cosine_exponential(spec.get("delta_t"), 2.0 * std::numbers::pi * spec.get("f") * ts,
                                        ts / spec.get("sigma_t"));
    default:
      throw ConfigError("realize_composite: family '" + std::string(to_string(spec.family)) +
                        "' is not a composite family");
  }
}

/// Second-order model of the test input u(t_j) = e^{-alpha t_j} sin(omega0 t_j):
/// z_{j+1} = E z_j + F delta_j, u_j = H z_j, z_0 = 0.
struct InputModel {
  Eigen::Matrix2d E;
  Eigen::Vector2d F;
  Eigen::RowVector2d H;
};

inline InputModel make_input_model(double alpha, double omega0) {
  InputModel m;
  m.E << 2.0 * std::exp(-alpha) * std::cos(omega0), -std::exp(-2.0 * alpha), 1.0, 0.0;
  m.F << 1.0, 0.0;
  m.H << std::exp(-alpha) * std::sin(omega0), 0.0;
  return m;
}

/// Largest |rho| accepted by the DC realization; |rho| = 1 is clamped here.
inline constexpr double kDcRhoClamp = 1.0 - 1e-9;

/// Per-location realization of the input-convolved DC kernel (r = 3).
///
/// State [a_j; z_j]: a_j carries the impulse-response coefficient for lag j
/// scaled by (1 - rho^2)^{-1/2}, z_j is the input filter state. The noise
/// feeding a_{j+1} has variance delta * lambda^j so that
/// Cov((1-rho^2)^{1/2} a_k, (1-rho^2)^{1/2} a_k') = delta lambda^{(k+k'-2)/2} rho^{|k-k'|}.
inline Realization realize_dc_input(double delta, double lambda, double rho, const InputModel& input) {
  if (!(delta >= 0.0)) throw ConfigError("realize_dc_input: delta must be >= 0");
  if (!(lambda >= 0.0 && lambda < 1.0)) throw ConfigError("realize_dc_input: lambda must lie in [0,1)");
  if (!(std::abs(rho) <= 1.0)) throw ConfigError("realize_dc_input: |rho| must be <= 1");
  rho = std::clamp(rho, -kDcRhoClamp, kDcRhoClamp);
  const double c = std::sqrt(1.0 - rho * rho);

  Realization re;
  re.F = Eigen::MatrixXd::Zero(3, 3);
  re.F(0, 0) = std::sqrt(lambda) * rho;
  re.F.block(1, 0, 2, 1) = c * input.F;
  re.F.block(1, 1, 2, 2) = input.E;
  re.G = Eigen::MatrixXd::Zero(3, 1);
  re.G(0, 0) = 1.0;
  re.H = Eigen::RowVectorXd::Zero(3);
  re.H.segment(1, 2) = input.H;
  re.init_cov = Eigen::MatrixXd::Zero(3, 3);
  re.init_cov(0, 0) = delta / (1.0 - rho * rho);
  re.noise_scale = [delta, lambda](std::size_t j) { return delta * std::pow(lambda, static_cast<double>(j)); };
  return re;
}

/// Dispatches on the family. The DC family needs the input model constants
/// stored in spec.fixed.
inline Realization realize(const TemporalKernelSpec& spec, double ts) {
  spec.validate();
  switch (spec.family) {
    case TemporalFamily::Exponential:
      return realize_exponential(spec.get("c"), ts / spec.get("sigma_t"));
    case TemporalFamily::Matern32:
      return realize_matern32(spec.get("h_t"), spec.get("theta_t"), ts);
    case TemporalFamily::DCInputConvolved:
      return realize_dc_input(spec.get("delta_t"), spec.get("lambda_t"), spec.get("rho_t"),
                              make_input_model(spec.get("input_alpha") * ts, spec.get("input_omega0") * ts));
    default:
      return realize_composite(spec, ts);
  }
}

}  // namespace stgp
