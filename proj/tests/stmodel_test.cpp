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
#include "stgp/stmodel.hpp"
#include "test_util.hpp"

namespace stgp {
namespace {

using testing::Rng;

Realization exp_half() { return realize_exponential(1.0, std::log(2.0)); }

TEST(TransformedModel, IdentityGram) {
  const auto m = build_transformed_model(exp_half(), Eigen::MatrixXd::Identity(3, 3), 1.0);
  EXPECT_EQ(m.Lambda, Eigen::MatrixXd::Identity(3, 3));
  EXPECT_TRUE(m.d.isApprox(Eigen::VectorXd::Ones(3)));
  for (Eigen::Index i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(m.block_H(i)(0), m.realization.H(0));
}

TEST(TransformedModel, ScaledSingleLocation) {
  const auto m = build_transformed_model(exp_half(), Eigen::MatrixXd::Constant(1, 1, 4.0), 1.0);
  EXPECT_DOUBLE_EQ(m.block_H(0)(0), 2.0 * m.realization.H(0));
  EXPECT_DOUBLE_EQ(m.Lambda(0, 0), 1.0);
}

TEST(TransformedModel, RejectsAsymmetricGram) {
  Eigen::MatrixXd k = Eigen::MatrixXd::Identity(2, 2);
  k(0, 1) = 0.3;
  EXPECT_THROW(build_transformed_model(exp_half(), k, 1.0), InputError);
  Eigen::MatrixXd neg = Eigen::MatrixXd::Identity(2, 2);
  neg(1, 1) = -0.5;
  EXPECT_THROW(build_transformed_model(exp_half(), neg, 1.0), InputError);
}

TEST(TransformedModel, ClipsTinyNegativeEigenvalues) {
  Eigen::MatrixXd k = Eigen::MatrixXd::Ones(3, 3);  // rank one
  k(0, 0) -= 1e-13;
  const auto m = build_transformed_model(exp_half(), k, 1.0);
  EXPECT_GE(m.d.minCoeff(), 0.0);
  EXPECT_NEAR(m.d(0), 3.0, 1e-12);
}

TEST(TransformedModelProperty, EigenInvariants) {
  Rng rng(31);
  for (int draw = 0; draw < 20; ++draw) {
    const Eigen::Index m = 1 + static_cast<Eigen::Index>(rng() % 8);
    const Eigen::MatrixXd ks = testing::random_spd(rng, m);
    const auto model = build_transformed_model(exp_half(), ks, 1.0);
    EXPECT_LE((model.Lambda * model.Lambda.transpose() - Eigen::MatrixXd::Identity(m, m)).cwiseAbs().maxCoeff(),
              1e-10);
    EXPECT_LE((model.Lambda * model.d.asDiagonal() * model.Lambda.transpose() - ks).norm(), 1e-8 * ks.norm());
    for (Eigen::Index i = 1; i < m; ++i) EXPECT_GE(model.d(i - 1), model.d(i));
    EXPECT_GE(model.d.minCoeff(), 0.0);
  }
}

TEST(TransformOutputs, IdentityAndBasisVectors) {
  Rng rng(32);
  const auto eye = build_transformed_model(exp_half(), Eigen::MatrixXd::Identity(3, 3), 1.0);
  const Eigen::MatrixXd y = testing::random_normal(rng, 3, 4);
  EXPECT_EQ(transform_outputs(eye, y), y);

  const auto model = build_transformed_model(exp_half(), testing::random_spd(rng, 4), 1.0);
  const Eigen::MatrixXd l = transform_outputs(model, model.Lambda.col(0));
  EXPECT_NEAR(l(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(l.bottomRows(3).norm(), 0.0, 1e-12);
}

TEST(TransformOutputs, RoundTripAndNorms) {
  Rng rng(33);
  const auto model = build_transformed_model(exp_half(), testing::random_spd(rng, 5), 1.0);
  const Eigen::MatrixXd y = testing::random_normal(rng, 5, 7);
  const Eigen::MatrixXd l = transform_outputs(model, y);
  EXPECT_LE((model.Lambda * l - y).cwiseAbs().maxCoeff(), 1e-10);
  for (Eigen::Index j = 0; j < 7; ++j) EXPECT_NEAR(l.col(j).norm(), y.col(j).norm(), 1e-10);
}

TEST(TransformOutputs, RejectsMissing) {
  const auto model = build_transformed_model(exp_half(), Eigen::MatrixXd::Identity(2, 2), 1.0);
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(2, 3);
  y(1, 2) = std::nan("");
  EXPECT_THROW(transform_outputs(model, y), MissingDataError);
}

TEST(UntransformField, ZeroAndSingleBlock) {
  const auto model = build_transformed_model(exp_half(), Eigen::MatrixXd::Identity(3, 3), 1.0);
  EXPECT_EQ(untransform_field(model, Eigen::MatrixXd::Zero(1, 3)).norm(), 0.0);
  const auto one = build_transformed_model(exp_half(), Eigen::MatrixXd::Ones(1, 1), 1.0);
  Eigen::MatrixXd x(1, 1);
  x << 0.7;
  EXPECT_DOUBLE_EQ(untransform_field(one, x)(0), one.realization.H(0) * 0.7);
}

// Cov of the stacked noiseless outputs of the lifted model, assembled from
// per-block covariances, against K_t (x) K_s.
TEST(TransformedModelProperty, KroneckerLiftCovariance) {
  Rng rng(34);
  for (auto f : testing::all_families()) {
    const Eigen::Index n = 6, m = 4;
    auto in = testing::random_instance(rng, f, n, m);
    const auto& re = in.model.realization;
    // block output covariance over time, shared by all blocks up to d_i
    Eigen::MatrixXd kt(n, n);
    const auto prior = propagate_prior(re, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      Eigen::RowVectorXd hf = re.H;
      for (Eigen::Index k = j; k < n; ++k) {
        kt(k, j) = kt(j, k) = hf * prior[static_cast<std::size_t>(j)] * re.H.transpose();
        hf = hf * re.F;
      }
    }
    Eigen::MatrixXd lifted(n * m, n * m);
    const Eigen::MatrixXd spatial = in.model.Lambda * in.model.d.asDiagonal() * in.model.Lambda.transpose();
    lifted = oracle::kron(kt, spatial);
    const Eigen::MatrixXd ref = oracle::kron(in.Kt_all, in.Ks);
    EXPECT_LE((lifted - ref).cwiseAbs().maxCoeff(), 1e-8 * (1.0 + ref.cwiseAbs().maxCoeff())) << to_string(f);
  }
}

}  // namespace
}  // namespace stgp
