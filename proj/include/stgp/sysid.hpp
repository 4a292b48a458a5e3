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

// Spatially distributed FIR identification: test-system ensembles, data
// simulation, the spatial-temporal estimator built on the input-convolved DC
// realization, and a per-location kernel-regularized FIR baseline.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "stgp/error.hpp"
#include "stgp/kalman.hpp"
#include "stgp/objective.hpp"
#include "stgp/optimize.hpp"
#include "stgp/parallel.hpp"
#include "stgp/pipeline.hpp"

namespace stgp::sysid {

using cplx = std::complex<double>;

struct EnsembleConfig {
  int order = 30;
  int n_top = 5;              ///< poles moved between systems
  double top_lo = 0.8, top_hi = 0.9;
  double rest_max = 0.75;     ///< bound on the remaining pole moduli
  double radius = 0.05;       ///< perturbation radius
  int max_attempts = 1000;
};

struct TestSystem {
  std::vector<cplx> poles;  ///< first n_top entries are the perturbed ones
  std::vector<cplx> zeros;
  double gain = 1.0;
};

struct Ensemble {
  TestSystem base;
  std::vector<TestSystem> systems;
  Eigen::MatrixXd locations;  ///< M x 2 n_top: (Re, Im) of the perturbed poles
  int attempts = 0;
};

/// h_1..h_n of g prod(z - z_l) / prod(z - p_l), evaluated as a cascade of
/// first-order sections (needs one more pole than zeros).
inline std::vector<double> impulse_response(const TestSystem& s, std::size_t n) {
  if (s.poles.size() != s.zeros.size() + 1) throw ConfigError("impulse_response: need one more pole than zeros");
  std::vector<cplx> x(n + 1, 0.0);
  x[0] = 1.0;
  std::vector<cplx> y(n + 1);
  for (std::size_t l = 0; l < s.poles.size(); ++l) {
    const cplx p = s.poles[l];
    if (l < s.zeros.size()) {
      const cplx z = s.zeros[l];  // (1 - z q^-1) / (1 - p q^-1)
      y[0] = x[0];
      for (std::size_t k = 1; k <= n; ++k) y[k] = x[k] - z * x[k - 1] + p * y[k - 1];
    } else {  // q^-1 / (1 - p q^-1)
      y[0] = 0.0;
      for (std::size_t k = 1; k <= n; ++k) y[k] = x[k - 1] + p * y[k - 1];
    }
    x.swap(y);
  }
  std::vector<double> h(n);
  for (std::size_t k = 0; k < n; ++k) h[k] = s.gain * x[k + 1].real();
  return h;
}

namespace detail {

/// `count` roots closed under conjugation with moduli drawn by `modulus`.
template <class Modulus>
std::vector<cplx> conjugate_closed(std::mt19937_64& rng, int count, Modulus modulus) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int pairs = std::uniform_int_distribution<int>(0, count / 2)(rng);
  std::vector<cplx> roots;
  for (int k = 0; k < pairs; ++k) {
    const cplx z = std::polar(modulus(), std::numbers::pi * unit(rng));
    roots.push_back(z);
    roots.push_back(std::conj(z));
  }
  for (int k = 2 * pairs; k < count; ++k) roots.push_back((unit(rng) < 0.5 ? -1.0 : 1.0) * modulus());
  return roots;
}

/// Sorts by modulus, descending, with each conjugate pair adjacent and the
/// positive imaginary part first.
inline void sort_by_modulus(std::vector<cplx>& r) {
  std::stable_sort(r.begin(), r.end(), [](cplx a, cplx b) {
    if (std::abs(a) != std::abs(b)) return std::abs(a) > std::abs(b);
    if (a.real() != b.real()) return a.real() > b.real();
    return a.imag() > b.imag();
  });
}

/// Whether the first n entries are closed under conjugation.
inline bool head_is_conjugate_closed(const std::vector<cplx>& r, int n) {
  for (int k = 0; k < n; ++k) {
    if (r[k].imag() == 0.0) continue;
    bool found = false;
    for (int q = 0; q < n; ++q)
      if (q != k && r[q] == std::conj(r[k])) found = true;
    if (!found) return false;
  }
  return true;
}

}  // namespace detail

/// Base system with `order` poles (the n_top largest in [top_lo, top_hi],
/// the rest below rest_max) and order-1 zeros in the unit disk, scaled to a
/// unit-energy impulse response; then M copies with the n_top leading poles
/// moved uniformly within `radius` (pairs move together).
inline Ensemble generate_ensemble(std::uint64_t seed, int m, const EnsembleConfig& cfg = {}) {
  if (m < 1) throw ConfigError("generate_ensemble: M must be >= 1");
  if (cfg.n_top < 1 || cfg.n_top >= cfg.order) throw ConfigError("generate_ensemble: bad n_top");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Ensemble ens;
  bool ok = false;
  for (int attempt = 1; attempt <= cfg.max_attempts && !ok; ++attempt) {
    ens.attempts = attempt;
    auto top = detail::conjugate_closed(rng, cfg.n_top, [&] { return cfg.top_lo + (cfg.top_hi - cfg.top_lo) * unit(rng); });
    auto rest = detail::conjugate_closed(rng, cfg.order - cfg.n_top, [&] { return cfg.rest_max * std::sqrt(unit(rng)); });
    std::vector<cplx> poles = top;
    poles.insert(poles.end(), rest.begin(), rest.end());
    detail::sort_by_modulus(poles);
    const double mod_top_min = std::abs(poles[cfg.n_top - 1]);
    const double mod_next = std::abs(poles[cfg.n_top]);
    ok = std::abs(poles[0]) <= cfg.top_hi && mod_top_min >= cfg.top_lo && mod_next < cfg.rest_max &&
         detail::head_is_conjugate_closed(poles, cfg.n_top);
    if (!ok) continue;
    ens.base.poles = poles;
    ens.base.zeros = detail::conjugate_closed(rng, cfg.order - 1, [&] { return std::sqrt(unit(rng)); });
  }
  if (!ok) throw NumericalError("generate_ensemble: no admissible base system after " + std::to_string(cfg.max_attempts) + " attempts");

  ens.base.gain = 1.0;
  const auto h = impulse_response(ens.base, 4000);
  double energy = 0.0;
  for (double v : h) energy += v * v;
  ens.base.gain = 1.0 / std::sqrt(energy);

  ens.locations.resize(m, 2 * cfg.n_top);
  for (int i = 0; i < m; ++i) {
    TestSystem s = ens.base;
    for (int k = 0; k < cfg.n_top; ++k) {
      const cplx p = ens.base.poles[k];
      if (p.imag() == 0.0) {
        s.poles[k] = p.real() + cfg.radius * (2.0 * unit(rng) - 1.0);
      } else if (p.imag() > 0.0) {
        const double r = cfg.radius * std::sqrt(unit(rng)), phi = 2.0 * std::numbers::pi * unit(rng);
        s.poles[k] = p + std::polar(r, phi);
        s.poles[k + 1] = std::conj(s.poles[k]);
        ++k;
      }
    }
    for (int k = 0; k < cfg.n_top; ++k) {
      ens.locations(i, 2 * k) = s.poles[k].real();
      ens.locations(i, 2 * k + 1) = s.poles[k].imag();
    }
    ens.systems.push_back(std::move(s));
  }
  return ens;
}

struct SimConfig {
  Eigen::Index N = 400;
  Eigen::Index n_b = 125;
  double snr = 1.0;
  double input_alpha = 1e-2;
  double input_omega0 = std::numbers::pi / 8.0;
};

struct SysidData {
  DataPanel panel;          ///< M x N outputs, locations = pole coordinates
  Eigen::MatrixXd b_true;   ///< M x n_b
  Eigen::VectorXd u;        ///< u(t_0), ..., u(t_N)
  double sigma2 = 0.0;
  double tail_energy = 0.0; ///< worst relative impulse-response energy beyond n_b
  SimConfig cfg;
};

inline double test_input(double alpha, double omega0, double t) { return std::exp(-alpha * t) * std::sin(omega0 * t); }

/// Outputs f_i(t_j) = sum_{k=1}^{n_b} b_{i,k} u(t_{j-k}) plus white noise with
/// one variance chosen so that mean_i var(f_i) / sigma^2 = snr.
inline SysidData simulate_data(const Ensemble& ens, const SimConfig& cfg, std::uint64_t seed) {
  if (cfg.N < 1 || cfg.n_b < 1) throw ConfigError("simulate_data: N and n_b must be positive");
  if (!(cfg.snr > 0.0)) throw ConfigError("simulate_data: snr must be > 0");
  const auto m = static_cast<Eigen::Index>(ens.systems.size());
  SysidData d;
  d.cfg = cfg;
  d.u.resize(cfg.N + 1);
  for (Eigen::Index j = 0; j <= cfg.N; ++j) d.u(j) = test_input(cfg.input_alpha, cfg.input_omega0, static_cast<double>(j));
  d.b_true.resize(m, cfg.n_b);
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(m, cfg.N);
  const std::size_t long_len = static_cast<std::size_t>(std::max<Eigen::Index>(4000, 4 * cfg.n_b));
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto h = impulse_response(ens.systems[static_cast<std::size_t>(i)], long_len);
    double total = 0.0, head = 0.0;
    for (std::size_t k = 0; k < h.size(); ++k) {
      total += h[k] * h[k];
      if (static_cast<Eigen::Index>(k) < cfg.n_b) head += h[k] * h[k];
    }
    d.tail_energy = std::max(d.tail_energy, total > 0.0 ? (total - head) / total : 0.0);
    for (Eigen::Index k = 0; k < cfg.n_b; ++k) d.b_true(i, k) = h[static_cast<std::size_t>(k)];
    for (Eigen::Index j = 1; j <= cfg.N; ++j)
      for (Eigen::Index k = 1; k <= std::min(cfg.n_b, j); ++k) f(i, j - 1) += d.b_true(i, k - 1) * d.u(j - k);
  }
  double mean_var = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double mu = f.row(i).mean();
    mean_var += (f.row(i).array() - mu).square().mean();
  }
  mean_var /= static_cast<double>(m);
  d.sigma2 = std::isinf(cfg.snr) ? 0.0 : mean_var / cfg.snr;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  DataPanel& p = d.panel;
  p.values = f;
  const double sd = std::sqrt(d.sigma2);
  for (Eigen::Index j = 0; j < cfg.N; ++j)  // time-major draw order
    for (Eigen::Index i = 0; i < m; ++i) p.values(i, j) += sd * noise(rng);
  p.locations = ens.locations;
  for (Eigen::Index i = 0; i < m; ++i) p.ids.push_back("sys" + std::to_string(i + 1));
  for (Eigen::Index j = 1; j <= cfg.N; ++j) p.times.push_back(static_cast<double>(j));
  p.ts = 1.0;
  p.set_split(-1, 0);
  return d;
}

struct EstimateOptions {
  std::string grid = "3";
  std::size_t n_starts = 5;
  int workers = 1;
  int max_evals = 300;
  std::map<std::string, std::pair<double, double>> boxes;
  std::optional<Hyper> hyper;  ///< skip the search and use these values
};

struct FirEstimate {
  Eigen::MatrixXd bhat;  ///< M x n_b
  std::vector<Hyper> hyper;  ///< one entry (spatial-temporal) or one per location
  double cost = 0.0;         ///< summed negative log marginal likelihood
};

inline std::map<std::string, double> input_constants(const SimConfig& cfg) {
  return {{"input_alpha", cfg.input_alpha}, {"input_omega0", cfg.input_omega0}};
}

/// MLM over [delta_t, lambda_t, rho_t, alpha_se, sigma2] with the
/// input-convolved DC realization, then b_hat_k = Lambda D^{1/2} (1-rho^2)^{1/2} a_{k|N}.
inline FirEstimate estimate_spatial_temporal(const SysidData& data, const EstimateOptions& opt = {}) {
  const DataPanel& p = data.panel;
  const Eigen::Index nb = data.cfg.n_b;
  if (p.T() < nb) throw ConfigError("estimate_spatial_temporal: need N >= n_b");
  const bool free_alpha = p.M() > 1;
  ParamLayout layout(TemporalFamily::DCInputConvolved, input_constants(data.cfg),
                     data_scales(p.values, p.locations, p.ts), free_alpha, true);
  for (const auto& [name, box] : opt.boxes)
    if (name != "alpha_se" || free_alpha) layout.set_box(name, box.first, box.second);
  StObjective obj(layout, p.locations, p.values, p.ts, Method::MLM);
  Eigen::VectorXd theta;
  if (opt.hyper) {
    obj.set_alpha_se(opt.hyper->spatial.alpha_se);
    theta = layout.encode(*opt.hyper);
  } else {
    OptimizeOptions oo;
    oo.n_starts = opt.n_starts;
    oo.workers = opt.workers;
    oo.local.max_evals = opt.max_evals;
    theta = optimize([&](const Eigen::VectorXd& t) { return obj(t); }, layout.space(), parse_grid(opt.grid, layout.space()), oo).theta;
  }
  const Hyper h = obj.decode(theta);
  const TransformedModel model = obj.model(h);
  const Eigen::MatrixXd l = obj.transformed(model);
  FirEstimate est;
  est.cost = mlm_cost(model, l, nullptr, opt.workers).value;
  const auto sm = smoother_pass(model, filter_pass(model, l, nullptr, opt.workers), opt.workers);
  const double rho = std::clamp(h.temporal.get("rho_t"), -kDcRhoClamp, kDcRhoClamp);
  const double c = std::sqrt(1.0 - rho * rho);
  est.bhat.resize(p.M(), nb);
  Eigen::VectorXd a(p.M());
  for (Eigen::Index k = 0; k < nb; ++k) {
    for (Eigen::Index i = 0; i < p.M(); ++i) a(i) = model.sqrt_d(i) * c * sm.x(i, k)(0);
    est.bhat.col(k) = model.Lambda * a;
  }
  est.hyper.push_back(h);
  return est;
}

// ---------------------------------------------------------------------------
// Per-location baseline

/// Regressor rows phi_j = [u(t_{j-1}), ..., u(t_{j-n_b})], j = 1..N.
inline Eigen::MatrixXd regressor(const Eigen::VectorXd& u, Eigen::Index n, Eigen::Index nb) {
  Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(n, nb);
  for (Eigen::Index j = 1; j <= n; ++j)
    for (Eigen::Index k = 1; k <= std::min(nb, j); ++k) phi(j - 1, k - 1) = u(j - k);
  return phi;
}

/// Kernel-regularized FIR regression y = Phi b + v, b ~ N(0, K_DC), evaluated
/// through the closed-form factor K_DC = L L^T with L = delta^{1/2} diag(lambda^{(k-1)/2}) L_rho,
/// (L_rho)_{ik} = rho^{i-k} s_k, s_1 = 1, s_k = (1-rho^2)^{1/2}.
class DcRegression {
 public:
  DcRegression(const Eigen::MatrixXd& phi, const Eigen::VectorXd& y)
      : gram_(phi.transpose() * phi), phity_(phi.transpose() * y), yty_(y.squaredNorm()), n_(phi.rows()) {}

  struct Result {
    double cost = 0.0, logdet = 0.0, quad = 0.0;
    Eigen::VectorXd bhat;
  };

  Result evaluate(double delta, double lambda, double rho, double sigma2, bool want_b = false) const {
    if (!(delta > 0.0) || !(lambda > 0.0 && lambda < 1.0) || !(std::abs(rho) <= 1.0) || !(sigma2 > 0.0))
      throw ConfigError("DC regression: hyper-parameters out of range");
    rho = std::clamp(rho, -kDcRhoClamp, kDcRhoClamp);
    const Eigen::Index nb = gram_.rows();
    const double sr = std::sqrt(1.0 - rho * rho);
    Eigen::VectorXd dscale(nb), s = Eigen::VectorXd::Constant(nb, sr);
    s(0) = 1.0;
    for (Eigen::Index k = 0; k < nb; ++k) dscale(k) = std::sqrt(delta) * std::pow(lambda, 0.5 * static_cast<double>(k));

    // B = L^T G L and w = L^T Phi^T y
    Eigen::MatrixXd b = dscale.asDiagonal() * gram_ * dscale.asDiagonal();
    right_lrho(b, rho, s);
    b.transposeInPlace();
    right_lrho(b, rho, s);
    Eigen::MatrixXd w = (dscale.cwiseProduct(phity_)).transpose();
    right_lrho(w, rho, s);

    b.diagonal().array() += sigma2;
    Eigen::LLT<Eigen::MatrixXd> llt(b);
    if (llt.info() != Eigen::Success) throw NumericalError("DC regression: factorization failed");
    const Eigen::VectorXd wv = w.transpose();
    const Eigen::VectorXd aw = llt.solve(wv);
    Result r;
    r.logdet = static_cast<double>(n_ - nb) * std::log(sigma2) +
               2.0 * llt.matrixLLT().diagonal().array().log().sum();
    r.quad = (yty_ - wv.dot(aw)) / sigma2;
    r.cost = 0.5 * (static_cast<double>(n_) * std::log(2.0 * std::numbers::pi) + r.logdet + r.quad);
    if (want_b) {
      // b = L A^{-1} w
      r.bhat.resize(nb);
      double acc = 0.0;
      for (Eigen::Index i = 0; i < nb; ++i) {
        acc = rho * acc + s(i) * aw(i);
        r.bhat(i) = dscale(i) * acc;
      }
    }
    return r;
  }

 private:
  /// x <- x L_rho, column recursion c_k = x_k + rho c_{k+1}, scaled by s_k.
  static void right_lrho(Eigen::MatrixXd& x, double rho, const Eigen::VectorXd& s) {
    for (Eigen::Index k = x.cols() - 2; k >= 0; --k) x.col(k) += rho * x.col(k + 1);
    x = x * s.asDiagonal();
  }

  Eigen::MatrixXd gram_;
  Eigen::VectorXd phity_;
  double yty_;
  Eigen::Index n_;
};

/// Per-location MLM fit of [delta_t, lambda_t, rho_t, sigma2] and the
/// regularized FIR estimate, ignoring the other locations.
inline FirEstimate estimate_temporal_baseline(const SysidData& data, const EstimateOptions& opt = {}) {
  const DataPanel& p = data.panel;
  const Eigen::Index nb = data.cfg.n_b, n = p.T();
  const Eigen::MatrixXd phi = regressor(data.u, n, nb);
  FirEstimate est;
  est.bhat.resize(p.M(), nb);
  est.hyper.resize(static_cast<std::size_t>(p.M()));
  std::vector<double> costs(static_cast<std::size_t>(p.M()));
  parallel_for(static_cast<std::size_t>(p.M()), opt.workers, [&](std::size_t bi) {
    const auto i = static_cast<Eigen::Index>(bi);
    const Eigen::VectorXd y = p.values.row(i).transpose();
    const DcRegression reg(phi, y);
    ParamLayout layout(TemporalFamily::DCInputConvolved, input_constants(data.cfg),
                       data_scales(y.transpose(), Eigen::MatrixXd::Zero(1, 1), p.ts), false, true);
    for (const auto& [name, box] : opt.boxes)
      if (name != "alpha_se") layout.set_box(name, box.first, box.second);
    auto eval = [&](const Eigen::VectorXd& t, bool want_b) {
      const Hyper h = layout.decode(t);
      return reg.evaluate(h.temporal.get("delta_t"), h.temporal.get("lambda_t"), h.temporal.get("rho_t"), h.sigma2, want_b);
    };
    Eigen::VectorXd theta;
    if (opt.hyper) {
      theta = layout.encode(*opt.hyper);
    } else {
      OptimizeOptions oo;
      oo.n_starts = opt.n_starts;
      oo.local.max_evals = opt.max_evals;
      theta = optimize([&](const Eigen::VectorXd& t) { return eval(t, false).cost; }, layout.space(),
                       parse_grid(opt.grid, layout.space()), oo)
                  .theta;
    }
    const auto r = eval(theta, true);
    est.bhat.row(i) = r.bhat.transpose();
    est.hyper[bi] = layout.decode(theta);
    costs[bi] = r.cost;
  });
  for (double c : costs) est.cost += c;
  return est;
}

struct FitB {
  Eigen::VectorXd per_system;  ///< NaN for a constant true FIR
  double average = std::numeric_limits<double>::quiet_NaN();
  std::size_t excluded = 0;
};

/// fit_i = 100 (1 - ||bhat_i - b_i|| / ||b_i - mean(b_i)||).
inline FitB compute_fit_b(const Eigen::MatrixXd& bhat, const Eigen::MatrixXd& btrue) {
  if (bhat.rows() != btrue.rows() || bhat.cols() != btrue.cols())
    throw InputError("compute_fit_b: shapes differ");
  FitB r;
  r.per_system.setConstant(btrue.rows(), std::numeric_limits<double>::quiet_NaN());
  double sum = 0.0;
  std::size_t used = 0;
  for (Eigen::Index i = 0; i < btrue.rows(); ++i) {
    const double den = (btrue.row(i).array() - btrue.row(i).mean()).matrix().norm();
    if (!(den > 0.0)) {
      ++r.excluded;
      continue;
    }
    r.per_system(i) = 100.0 * (1.0 - (bhat.row(i) - btrue.row(i)).norm() / den);
    sum += r.per_system(i);
    ++used;
  }
  if (used) r.average = sum / static_cast<double>(used);
  return r;
}

}  // namespace stgp::sysid
