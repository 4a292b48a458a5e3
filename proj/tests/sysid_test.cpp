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

#include <cmath>
#include <limits>
#include <numbers>

#include <gtest/gtest.h>

#include "stgp/sysid.hpp"
#include "test_util.hpp"

namespace stgp::sysid {
namespace {

using testing::Rng;

// kappa(k, k') = delta lambda^{(k+k'-2)/2} rho^{|k-k'|}, lags 1-based.
Eigen::MatrixXd dc_kernel(double delta, double lambda, double rho, Eigen::Index n) {
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < n; ++b)
      k(a, b) = delta * std::pow(lambda, 0.5 * double(a + b)) * std::pow(rho, double(std::abs(a - b)));
  return k;
}

Hyper dc_hyper(double delta, double lambda, double rho, double alpha_se, double sigma2, const SimConfig& cfg) {
  Hyper h;
  h.temporal = {TemporalFamily::DCInputConvolved,
                {{"delta_t", delta}, {"lambda_t", lambda}, {"rho_t", rho}},
                input_constants(cfg)};
  h.spatial.alpha_se = alpha_se;
  h.sigma2 = sigma2;
  return h;
}

TEST(Ensemble, ZeroRadiusGivesIdenticalSystems) {
  EnsembleConfig cfg;
  cfg.radius = 0.0;
  const auto ens = generate_ensemble(11, 4, cfg);
  for (const auto& s : ens.systems) {
    EXPECT_EQ(s.poles, ens.base.poles);
    EXPECT_EQ(s.zeros, ens.base.zeros);
  }
  for (Eigen::Index i = 1; i < 4; ++i) EXPECT_EQ(ens.locations.row(i), ens.locations.row(0));
}

TEST(Ensemble, StructureHoldsAcrossSeeds) {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const auto ens = generate_ensemble(seed, 6);
    ASSERT_EQ(ens.base.poles.size(), 30u);
    ASSERT_EQ(ens.base.zeros.size(), 29u);
    for (int k = 0; k < 5; ++k) {
      EXPECT_GE(std::abs(ens.base.poles[k]), 0.8);
      EXPECT_LE(std::abs(ens.base.poles[k]), 0.9);
    }
    for (std::size_t k = 5; k < 30; ++k) EXPECT_LT(std::abs(ens.base.poles[k]), 0.75);
    for (const auto& z : ens.base.zeros) EXPECT_LT(std::abs(z), 1.0);
    for (const auto& s : ens.systems) {
      EXPECT_TRUE(detail::head_is_conjugate_closed(s.poles, 30));
      EXPECT_TRUE(detail::head_is_conjugate_closed(s.zeros, 29));
      for (int k = 0; k < 5; ++k) {
        EXPECT_LE(std::abs(s.poles[k]), 0.95 + 1e-15);
        EXPECT_LE(std::abs(s.poles[k] - ens.base.poles[k]), 0.05 + 1e-15);
      }
      const auto h = impulse_response(s, 200);
      for (double v : h) EXPECT_TRUE(std::isfinite(v));
    }
  }
}

TEST(Ensemble, Deterministic) {
  const auto a = generate_ensemble(5, 8), b = generate_ensemble(5, 8), c = generate_ensemble(6, 8);
  EXPECT_EQ(a.locations, b.locations);
  EXPECT_EQ(a.base.gain, b.base.gain);
  EXPECT_NE(a.locations, c.locations);
}

TEST(Ensemble, BaseHasUnitEnergy) {
  const auto ens = generate_ensemble(3, 1);
  double e = 0.0;
  for (double v : impulse_response(ens.base, 4000)) e += v * v;
  EXPECT_NEAR(e, 1.0, 1e-12);
}

TEST(ImpulseResponse, MatchesExpandedDifferenceEquation) {
  // (z - 0.3)(z + 0.5) / ((z - 0.9)(z - (0.4+0.5i))(z - (0.4-0.5i)))
  TestSystem s;
  s.poles = {0.9, {0.4, 0.5}, {0.4, -0.5}};
  s.zeros = {0.3, -0.5};
  s.gain = 2.0;
  // den = z^3 - 1.7 z^2 + 1.13 z - 0.369, num = z^2 + 0.2 z - 0.15
  const double a[] = {1.0, -1.7, 1.13, -0.369}, b[] = {0.0, 1.0, 0.2, -0.15};
  std::vector<double> ref(40, 0.0);
  for (int k = 0; k < 40; ++k) {
    double v = k < 4 ? b[k] : 0.0;
    for (int i = 1; i <= std::min(k, 3); ++i) v -= a[i] * ref[k - i];
    ref[k] = v;
  }
  const auto h = impulse_response(s, 39);
  for (int k = 1; k < 40; ++k) EXPECT_NEAR(h[k - 1], 2.0 * ref[k], 1e-13) << k;
}

TEST(Simulate, NoiselessOutputIsTheConvolution) {
  const auto ens = generate_ensemble(2, 3);
  SimConfig cfg;
  cfg.N = 60;
  cfg.n_b = 25;
  cfg.snr = std::numeric_limits<double>::infinity();
  const auto d = simulate_data(ens, cfg, 1);
  EXPECT_EQ(d.sigma2, 0.0);
  for (Eigen::Index j = 0; j <= cfg.N; ++j)
    EXPECT_NEAR(d.u(j), testing::test_input(cfg.input_alpha, cfg.input_omega0, double(j)), 1e-15);
  const Eigen::MatrixXd phi = regressor(d.u, cfg.N, cfg.n_b);
  EXPECT_LT((d.panel.values - d.b_true * phi.transpose()).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_GT(d.tail_energy, 0.0);
  EXPECT_LT(d.tail_energy, 1.0);
}

TEST(Simulate, NoiseLevelFollowsSnr) {
  const auto ens = generate_ensemble(4, 20);
  SimConfig cfg;
  cfg.snr = 1.0;
  const auto d = simulate_data(ens, cfg, 9);
  const Eigen::MatrixXd clean = d.b_true * regressor(d.u, cfg.N, cfg.n_b).transpose();
  const Eigen::MatrixXd noise = d.panel.values - clean;
  const double var = noise.squaredNorm() / double(noise.size());
  EXPECT_NEAR(var / d.sigma2, 1.0, 0.05);
}

TEST(Baseline, CostMatchesDenseGaussian) {
  Rng rng(17);
  const Eigen::Index n = 15, nb = 10;
  Eigen::VectorXd u(n + 1);
  for (Eigen::Index j = 0; j <= n; ++j) u(j) = testing::test_input(0.05, 0.7, double(j));
  const Eigen::MatrixXd phi = regressor(u, n, nb);
  const Eigen::VectorXd y = testing::random_normal(rng, n, 1);
  for (double rho : {-0.7, 0.0, 0.4, 0.95}) {
    const double delta = 1.7, lambda = 0.8, s2 = 0.3;
    const DcRegression reg(phi, y);
    const auto r = reg.evaluate(delta, lambda, rho, s2, true);
    const Eigen::MatrixXd k = dc_kernel(delta, lambda, rho, nb);
    const Eigen::MatrixXd sig = phi * k * phi.transpose() + s2 * Eigen::MatrixXd::Identity(n, n);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(sig);
    const double logdet = ldlt.vectorD().array().log().sum();
    const double quad = y.dot(ldlt.solve(y));
    EXPECT_NEAR(r.logdet, logdet, 1e-10);
    EXPECT_NEAR(r.quad, quad, 1e-10 * std::max(1.0, quad));
    const Eigen::VectorXd b = k * phi.transpose() * ldlt.solve(y);
    EXPECT_LT((r.bhat - b).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(SpatialTemporal, MatchesDensePosteriorForTwoSystems) {
  EnsembleConfig ec;
  const auto ens = generate_ensemble(8, 2, ec);
  SimConfig cfg;
  cfg.N = 30;
  cfg.n_b = 20;
  auto d = simulate_data(ens, cfg, 4);
  const double delta = 0.8, lambda = 0.85, rho = 0.6, alpha_se = 0.02, s2 = d.sigma2;
  EstimateOptions opt;
  opt.hyper = dc_hyper(delta, lambda, rho, alpha_se, s2, cfg);
  const auto est = estimate_spatial_temporal(d, opt);

  // dense oracle over all N lags: b ~ N(0, K_s (x) K_DC), y_i = Phi b_i + v_i
  const Eigen::Index n = cfg.N;
  const Eigen::MatrixXd phi = regressor(d.u, n, n);
  const Eigen::MatrixXd kdc = dc_kernel(delta, lambda, rho, n);
  Eigen::MatrixXd ks(2, 2);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      ks(a, b) = std::exp(-(ens.locations.row(a) - ens.locations.row(b)).squaredNorm() / alpha_se);
  const Eigen::MatrixXd kb = oracle::kron(ks, kdc);
  const Eigen::MatrixXd big_phi = oracle::kron(Eigen::MatrixXd::Identity(2, 2), phi);
  Eigen::VectorXd y(2 * n);
  y << d.panel.values.row(0).transpose(), d.panel.values.row(1).transpose();
  const Eigen::MatrixXd sig = big_phi * kb * big_phi.transpose() + s2 * Eigen::MatrixXd::Identity(2 * n, 2 * n);
  const Eigen::VectorXd b = kb * big_phi.transpose() * sig.ldlt().solve(y);
  for (int i = 0; i < 2; ++i)
    for (Eigen::Index k = 0; k < cfg.n_b; ++k) EXPECT_NEAR(est.bhat(i, k), b(i * n + k), 1e-8) << i << "," << k;
}

TEST(SpatialTemporal, SingleSystemMatchesBaseline) {
  const auto ens = generate_ensemble(21, 1);
  SimConfig cfg;
  cfg.N = 80;
  cfg.n_b = 80;
  const auto d = simulate_data(ens, cfg, 2);
  EstimateOptions opt;
  opt.hyper = dc_hyper(0.5, 0.9, 0.7, 1.0, d.sigma2, cfg);
  const auto st = estimate_spatial_temporal(d, opt);
  const auto bl = estimate_temporal_baseline(d, opt);
  EXPECT_LT((st.bhat - bl.bhat).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_NEAR(st.cost, bl.cost, 1e-6 * std::abs(bl.cost));
}

TEST(SpatialTemporal, ZeroInputGivesZeroEstimate) {
  const auto ens = generate_ensemble(1, 3);
  SimConfig cfg;
  cfg.N = 40;
  cfg.n_b = 20;
  cfg.input_omega0 = 0.0;  // u == 0
  auto d = simulate_data(ens, cfg, 3);
  d.sigma2 = 1.0;
  Rng rng5(5);
  d.panel.values = testing::random_normal(rng5, 3, 40);
  EstimateOptions opt;
  opt.hyper = dc_hyper(1.0, 0.9, 0.5, 0.1, 1.0, cfg);
  EXPECT_EQ(estimate_spatial_temporal(d, opt).bhat.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(estimate_temporal_baseline(d, opt).bhat.cwiseAbs().maxCoeff(), 0.0);
}

TEST(SpatialTemporal, SearchImprovesOnSmallProblem) {
  const auto ens = generate_ensemble(12, 6);
  SimConfig cfg;
  cfg.N = 120;
  cfg.n_b = 40;
  cfg.snr = 10.0;
  const auto d = simulate_data(ens, cfg, 12);
  EstimateOptions opt;
  opt.grid = "2";
  opt.n_starts = 2;
  opt.max_evals = 150;
  const auto st = estimate_spatial_temporal(d, opt);
  const auto bl = estimate_temporal_baseline(d, opt);
  const auto fs = compute_fit_b(st.bhat, d.b_true), fb = compute_fit_b(bl.bhat, d.b_true);
  EXPECT_GT(fs.average, 50.0);
  EXPECT_GT(fb.average, 50.0);
}

TEST(Baseline, NearlyNoiselessDataIsFitAlmostExactly) {
  const auto ens = generate_ensemble(31, 2);
  SimConfig cfg;
  cfg.N = 300;
  cfg.n_b = 60;
  cfg.snr = 1e6;
  const auto d = simulate_data(ens, cfg, 31);
  EstimateOptions opt;
  opt.grid = "3";
  opt.n_starts = 2;
  const auto f = compute_fit_b(estimate_temporal_baseline(d, opt).bhat, d.b_true);
  EXPECT_GT(f.per_system.minCoeff(), 98.0);
}

TEST(Baseline, Deterministic) {
  const auto ens = generate_ensemble(32, 3);
  SimConfig cfg;
  cfg.N = 100;
  cfg.n_b = 30;
  const auto d = simulate_data(ens, cfg, 32);
  EstimateOptions opt;
  opt.grid = "2";
  opt.n_starts = 1;
  const auto a = estimate_temporal_baseline(d, opt);
  opt.workers = 3;
  const auto b = estimate_temporal_baseline(d, opt);
  EXPECT_EQ(a.bhat, b.bhat);
}

TEST(FitB, ExactAndMeanEstimates) {
  Eigen::MatrixXd bt(1, 4);
  bt << 0.5, -1.0, 2.0, 0.25;
  EXPECT_DOUBLE_EQ(compute_fit_b(bt, bt).average, 100.0);
  const Eigen::MatrixXd mean = Eigen::MatrixXd::Constant(1, 4, bt.mean());
  EXPECT_NEAR(compute_fit_b(mean, bt).average, 0.0, 1e-12);
}

TEST(FitB, HandValues) {
  Eigen::MatrixXd bt(2, 3), bh(2, 3);
  bt << 1, 2, 3, 4, 4, 4;
  bh << 1, 2, 4, 0, 0, 0;
  const auto f = compute_fit_b(bh, bt);
  EXPECT_NEAR(f.per_system(0), 29.289321881345245, 1e-12);
  EXPECT_TRUE(std::isnan(f.per_system(1)));
  EXPECT_EQ(f.excluded, 1u);
  EXPECT_NEAR(f.average, 29.289321881345245, 1e-12);
  EXPECT_THROW(compute_fit_b(bh, bt.leftCols(2)), InputError);
}

}  // namespace
}  // namespace stgp::sysid
