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

#include <gtest/gtest.h>

#include "stgp/kalman.hpp"
#include "test_util.hpp"

namespace stgp {
namespace {

using testing::Rng;

TransformedModel scalar_model(double sigma2 = 1.0) {
  return build_transformed_model(realize_exponential(1.0, std::log(2.0)), Eigen::MatrixXd::Ones(1, 1), sigma2);
}

TEST(Filter, ScalarHandValues) {
  const auto model = scalar_model();
  const Eigen::MatrixXd l = Eigen::MatrixXd::Ones(1, 1);
  const auto fr = filter_pass(model, l);
  EXPECT_NEAR(fr.P_pred(0, 0)(0, 0), 4.0 / 3.0, 1e-14);
  EXPECT_NEAR(fr.innov_var(0, 0), 2.0, 1e-14);
  EXPECT_DOUBLE_EQ(fr.innov(0, 0), 1.0);
}

TEST(Filter, AllMaskedIsPriorPropagation) {
  Rng rng(41);
  auto in = testing::random_instance(rng, TemporalFamily::TE2ExpPlusMatern, 30, 1);
  MissingMask mask = MissingMask::Constant(1, 30, true);
  const auto fr = filter_pass(in.model, in.L, &mask);
  const auto prior = propagate_prior(in.model.realization, 30);
  for (Eigen::Index j = 0; j < 30; ++j) {
    EXPECT_EQ(fr.x_pred(0, j).norm(), 0.0);
    EXPECT_TRUE((fr.P_pred(0, j).array() == prior[static_cast<std::size_t>(j)].array()).all()) << j;
    EXPECT_TRUE(std::isnan(fr.innov(0, j)));
  }
}

TEST(Filter, MaskRequiresSingleBlock) {
  Rng rng(42);
  auto in = testing::random_instance(rng, TemporalFamily::Exponential, 5, 2);
  MissingMask mask = MissingMask::Constant(2, 5, false);
  EXPECT_THROW(filter_pass(in.model, in.L, &mask), InputError);
}

TEST(Filter, HugeNoiseGivesNoUpdate) {
  const auto model = scalar_model(1e14);
  const Eigen::MatrixXd l = Eigen::MatrixXd::Constant(1, 3, 5.0);
  const auto fr = filter_pass(model, l);
  for (Eigen::Index j = 0; j < 3; ++j) EXPECT_NEAR((fr.x_filt(0, j) - fr.x_pred(0, j)).norm(), 0.0, 1e-12);
}

TEST(Filter, InnovationVarianceAtLeastNoise) {
  Rng rng(43);
  for (auto f : testing::all_families()) {
    auto in = testing::random_instance(rng, f, 20, 4);
    const auto fr = filter_pass(in.model, in.L);
    EXPECT_GE(fr.innov_var.minCoeff(), in.sigma2 - 1e-12) << to_string(f);
  }
}

TEST(Smoother, SingleSampleEqualsFilter) {
  Rng rng(44);
  auto in = testing::random_instance(rng, TemporalFamily::PD, 1, 3);
  const auto fr = filter_pass(in.model, in.L);
  const auto sm = smoother_pass(in.model, fr);
  for (Eigen::Index i = 0; i < 3; ++i) {
    EXPECT_EQ(sm.x(i, 0), fr.x_filt(i, 0));
    EXPECT_EQ(sm.P(i, 0), fr.P_filt(i, 0));
  }
}

TEST(Smoother, NoiselessInterpolates) {
  Rng rng(45);
  auto in = testing::random_instance(rng, TemporalFamily::Matern32, 10, 1);
  in.model.sigma2 = 1e-10;
  const auto sm = smoother_pass(in.model, filter_pass(in.model, in.L));
  EXPECT_LE((sm.fhat - in.Y).cwiseAbs().maxCoeff(), 1e-5);
}

TEST(Predictor, ScalarOneStep) {
  const auto model = scalar_model();
  const Eigen::MatrixXd l = Eigen::MatrixXd::Ones(1, 1);
  const auto sm = smoother_pass(model, filter_pass(model, l));
  const auto pr = predictor_pass(model, sm, 1);
  EXPECT_NEAR(pr.fhat(0, 0), 0.25, 1e-14);
  EXPECT_EQ(predictor_pass(model, sm, 0).fhat.cols(), 0);
}

TEST(Predictor, LongHorizonDecaysToPrior) {
  Rng rng(46);
  auto in = testing::random_instance(rng, TemporalFamily::Exponential, 5, 2);
  in.spec.params["sigma_t"] = 2.0;
  in.model = build_transformed_model(realize(in.spec, 1.0), in.Ks, in.sigma2);
  in.L = transform_outputs(in.model, in.Y);
  const auto sm = smoother_pass(in.model, filter_pass(in.model, in.L));
  const auto pr = predictor_pass(in.model, sm, 200);
  EXPECT_LE(pr.fhat.col(199).cwiseAbs().maxCoeff(), 1e-12);
  for (Eigen::Index i = 0; i < 2; ++i)
    EXPECT_NEAR(pr.field_var(i, 199), in.Ks(i, i) * in.spec.get("c"), 1e-10);
}

// Structured smoother/predictor against dense GP conditioning.
TEST(KalmanProperty, MatchesDensePosterior) {
  Rng rng(47);
  int count = 0;
  for (int draw = 0; draw < 4; ++draw) {
    for (auto f : testing::all_families()) {
      const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng() % 8), m = 1 + static_cast<Eigen::Index>(rng() % 4);
      const Eigen::Index horizon = 3;
      auto in = testing::random_instance(rng, f, n, m, horizon);
      const auto post = oracle::dense_posterior(in.dense(), in.Kt_all);
      const auto sm = smoother_pass(in.model, filter_pass(in.model, in.L));
      const auto pr = predictor_pass(in.model, sm, horizon);
      Eigen::MatrixXd mean(m, n + horizon), var(m, n + horizon);
      mean << sm.fhat, pr.fhat;
      var << sm.field_var, pr.field_var;
      const double ms = 1.0 + post.mean.cwiseAbs().maxCoeff(), vs = 1.0 + post.var.cwiseAbs().maxCoeff();
      EXPECT_LE((mean - post.mean).cwiseAbs().maxCoeff(), 1e-6 * ms) << to_string(f) << " n=" << n << " m=" << m;
      EXPECT_LE((var - post.var).cwiseAbs().maxCoeff(), 1e-6 * vs) << to_string(f) << " n=" << n << " m=" << m;
      EXPECT_GE(var.minCoeff(), 0.0);
      ++count;
    }
  }
  EXPECT_GE(count, 20);
}

TEST(KalmanProperty, LogDetMatchesDense) {
  Rng rng(48);
  for (auto f : testing::all_families()) {
    auto in = testing::random_instance(rng, f, 7, 3);
    const auto fr = filter_pass(in.model, in.L);
    const double logdet = fr.innov_var.array().log().sum();
    const auto dense = oracle::dense_mlm(in.dense());
    EXPECT_NEAR(logdet, dense.logdet, 1e-8 * (1.0 + std::abs(dense.logdet))) << to_string(f);
  }
}

TEST(KalmanProperty, CovariancesSymmetric) {
  Rng rng(49);
  auto in = testing::random_instance(rng, TemporalFamily::TE2ExpPlusMatern, 40, 3);
  const auto fr = filter_pass(in.model, in.L);
  const auto sm = smoother_pass(in.model, fr);
  for (Eigen::Index i = 0; i < 3; ++i)
    for (Eigen::Index j = 0; j < 40; ++j) {
      EXPECT_EQ(fr.P_pred(i, j), fr.P_pred(i, j).transpose());
      EXPECT_EQ(fr.P_filt(i, j), fr.P_filt(i, j).transpose());
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sm.P(i, j));
      EXPECT_GE(es.eigenvalues().minCoeff(), -1e-10 * std::max(sm.P(i, j).trace(), 1e-300));
    }
}

TEST(KalmanProperty, WorkerCountDoesNotChangeResults) {
  Rng rng(50);
  auto in = testing::random_instance(rng, TemporalFamily::TE2Exp, 25, 6);
  const auto a = smoother_pass(in.model, filter_pass(in.model, in.L, nullptr, 1), 1);
  const auto b = smoother_pass(in.model, filter_pass(in.model, in.L, nullptr, 3), 3);
  EXPECT_TRUE((a.fhat.array() == b.fhat.array()).all());
  EXPECT_TRUE((a.field_var.array() == b.field_var.array()).all());
}

}  // namespace
}  // namespace stgp
