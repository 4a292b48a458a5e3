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
#include <cstring>
#include <filesystem>
#include <fstream>

#include <unistd.h>

#include <gtest/gtest.h>

#include "stgp/pipeline.hpp"
#include "test_util.hpp"

namespace stgp {
namespace {

namespace fs = std::filesystem;
using testing::Rng;

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() / ("stgp_pipeline_" + std::to_string(::getpid()) + "_" + std::to_string(counter_++));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(path_ / name) << text;
    return (path_ / name).string();
  }

 private:
  fs::path path_;
  static inline int counter_ = 0;
};

TEST(LoadPanel, OneEmptyCell) {
  TempDir d;
  const auto data = d.write("d.csv", "time,A,B\n1,0.5,1.5\n2,,2.5\n3,0.7,NaN\n");
  const auto loc = d.write("l.csv", "id,x,y\nA,0,0\nB,1,0\n");
  const auto p = load_panel(data, loc);
  EXPECT_EQ(p.M(), 2);
  EXPECT_EQ(p.T(), 3);
  EXPECT_EQ(p.missing().count(), 2);
  EXPECT_TRUE(std::isnan(p.values(0, 1)));
  EXPECT_DOUBLE_EQ(p.values(1, 2 - 1), 2.5);
  EXPECT_DOUBLE_EQ(p.ts, 1.0);

  const auto data2 = d.write("d2.csv", "time,A,B\n1,0.5,1.5\n2,,2.5\n3,0.7,1\n");
  EXPECT_EQ(load_panel(data2, loc).missing().count(), 1);
}

TEST(LoadPanel, LocationOrderFollowsHeaderAndHeaderIsOptional) {
  TempDir d;
  const auto data = d.write("d.csv", "time,B,A\n0,1,2\n");
  const auto loc = d.write("l.csv", "A,3,4\nB,5,6\n");
  const auto p = load_panel(data, loc);
  EXPECT_EQ(p.locations(0, 0), 5.0);
  EXPECT_EQ(p.locations(1, 1), 4.0);
}

TEST(LoadPanel, Errors) {
  TempDir d;
  const auto loc = d.write("l.csv", "A,0\nB,1\n");
  auto msg = [&](const std::string& data, const std::string& locs) -> std::string {
    try {
      load_panel(d.write("x.csv", data), locs);
    } catch (const InputError& e) {
      return e.what();
    }
    return "";
  };
  EXPECT_NE(msg("time,A,B\n1,1,2\n2,3\n", loc).find("x.csv:3"), std::string::npos);
  EXPECT_NE(msg("time,A,A\n1,1,2\n", loc).find("duplicate"), std::string::npos);
  EXPECT_NE(msg("time,A,B\n2,1,2\n1,3,4\n", loc).find("x.csv:3"), std::string::npos);
  EXPECT_NE(msg("time,A,B\n1,1,abc\n", loc).find("bad value"), std::string::npos);
  EXPECT_NE(msg("time,A,B\n1,1,2\n2,1,2\n4,1,2\n", loc).find("evenly"), std::string::npos);
  EXPECT_NE(msg("time,A,B,C\n1,1,2,3\n", loc).find("2 locations for 3"), std::string::npos);
  EXPECT_NE(msg("time,A,B\n1,1,2\n", d.write("l2.csv", "A,0\nA,1\n")).find("duplicate"), std::string::npos);
  EXPECT_THROW(load_panel(d.write("y.csv", "time,A\n1,1\n"), "/nonexistent/file.csv"), IoError);
}

TEST(LoadPanel, EcefUnitScaling) {
  TempDir d;
  const auto data = d.write("d.csv", "time,A\n1,1\n");
  const auto loc = d.write("l.csv", "A,10000,20000,-30000\n");
  PanelOptions opt;
  opt.coords = CoordMode::Ecef;
  const auto p = load_panel(data, loc, opt);
  EXPECT_DOUBLE_EQ(p.locations(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(p.locations(0, 2), -3.0);
  opt.coords = CoordMode::LatLon;
  const auto q = load_panel(data, d.write("m.csv", "A,0,0\n"), opt);
  EXPECT_NEAR(q.locations(0, 0), 637.8137, 1e-9);
}

TEST(Split, Bounds) {
  DataPanel p;
  p.values = Eigen::MatrixXd::Zero(2, 10);
  p.set_split(8, 2);
  EXPECT_EQ(p.train().cols(), 8);
  EXPECT_EQ(p.test().cols(), 2);
  EXPECT_THROW(p.set_split(9, 2), ConfigError);
  EXPECT_THROW(p.set_split(0, 2), ConfigError);
}

DataPanel series_panel(const Eigen::MatrixXd& values) {
  DataPanel p;
  p.values = values;
  p.locations = Eigen::MatrixXd::Zero(values.rows(), 1);
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    p.ids.push_back("s" + std::to_string(i));
    p.locations(i, 0) = static_cast<double>(i);
  }
  for (Eigen::Index j = 0; j < values.cols(); ++j) p.times.push_back(static_cast<double>(j + 1));
  p.set_split(-1, 0);
  return p;
}

Hyper fixed_exp(double c, double sigma_t, double sigma2) {
  Hyper h;
  h.temporal = TemporalKernelSpec(TemporalFamily::Exponential, {{"c", c}, {"sigma_t", sigma_t}});
  h.sigma2 = sigma2;
  return h;
}

// Dense GP conditioning of one series on its observed entries.
Eigen::VectorXd dense_fill(const Hyper& h, const Eigen::RowVectorXd& y) {
  const Eigen::Index n = y.size();
  const Eigen::MatrixXd k = testing::temporal_gram(h.temporal, n);
  std::vector<Eigen::Index> obs;
  for (Eigen::Index j = 0; j < n; ++j)
    if (!std::isnan(y(j))) obs.push_back(j);
  const auto no = static_cast<Eigen::Index>(obs.size());
  Eigen::MatrixXd koo(no, no), kxo(n, no);
  Eigen::VectorXd yo(no);
  for (Eigen::Index a = 0; a < no; ++a) {
    yo(a) = y(obs[a]);
    for (Eigen::Index b = 0; b < no; ++b) koo(a, b) = k(obs[a], obs[b]);
    for (Eigen::Index j = 0; j < n; ++j) kxo(j, a) = k(j, obs[a]);
  }
  koo.diagonal().array() += h.sigma2;
  return kxo * koo.ldlt().solve(yo);
}

TEST(Fill, CompletePanelUnchanged) {
  Rng rng(71);
  const auto p = series_panel(testing::random_normal(rng, 3, 20));
  const auto r = fill_missing(p);
  EXPECT_TRUE(r.diagnostics.empty());
  EXPECT_TRUE((r.panel.values.array() == p.values.array()).all());
}

TEST(Fill, SingleInteriorGapMatchesDenseGp) {
  Eigen::RowVectorXd y(12);
  for (Eigen::Index j = 0; j < 12; ++j) y(j) = 1.0 + 0.2 * static_cast<double>(j);
  y(5) = std::nan("");
  FillOptions opt;
  opt.hyper = fixed_exp(2.0, 6.0, 0.01);
  const auto r = fill_missing(series_panel(y), opt);
  ASSERT_EQ(r.diagnostics.size(), 1u);
  EXPECT_EQ(r.diagnostics[0].filled, 1u);
  EXPECT_FALSE(r.diagnostics[0].fallback);
  const double v = r.panel.values(0, 5);
  EXPECT_NEAR(v, dense_fill(*opt.hyper, y)(5), 1e-10);
  EXPECT_GT(v, y(4));
  EXPECT_LT(v, y(6));
}

TEST(Fill, AllButOneMissingDecaysToZero) {
  Eigen::RowVectorXd y = Eigen::RowVectorXd::Constant(15, std::nan(""));
  y(3) = 2.0;
  FillOptions opt;
  opt.hyper = fixed_exp(1.0, 2.0, 0.1);
  const auto r = fill_missing(series_panel(y), opt);
  const Eigen::VectorXd ref = dense_fill(*opt.hyper, y);
  for (Eigen::Index j = 0; j < 15; ++j)
    if (j != 3) {
      EXPECT_NEAR(r.panel.values(0, j), ref(j), 1e-10);
    }
  EXPECT_LT(std::abs(r.panel.values(0, 14)), std::abs(r.panel.values(0, 5)));
}

TEST(Fill, FittedHyperParametersAndFallback) {
  Rng rng(72);
  Eigen::MatrixXd y = testing::random_normal(rng, 2, 40);
  y(0, 7) = y(0, 8) = y(1, 30) = std::nan("");
  FillOptions opt;
  opt.grid = "3";
  const auto r = fill_missing(series_panel(y), opt);
  ASSERT_EQ(r.diagnostics.size(), 2u);
  EXPECT_EQ(r.diagnostics[0].filled, 2u);
  EXPECT_TRUE(r.diagnostics[0].params.count("sigma2"));
  EXPECT_FALSE(r.panel.values.hasNaN());

  opt.hyper = fixed_exp(1.0, 2.0, -1.0);  // invalid noise variance
  const auto bad = fill_missing(series_panel(y), opt);
  EXPECT_TRUE(bad.diagnostics[0].fallback);
  EXPECT_DOUBLE_EQ(bad.panel.values(0, 7), y(0, 6) + (y(0, 9) - y(0, 6)) / 3.0);
}

TEST(Fill, NoObservationsIsAnError) {
  Eigen::MatrixXd y = Eigen::MatrixXd::Constant(1, 4, std::nan(""));
  EXPECT_THROW(fill_missing(series_panel(y)), InputError);
}

TEST(FillProperty, ObservedCellsBitIdenticalAndIdempotent) {
  Rng rng(73);
  for (int draw = 0; draw < 5; ++draw) {
    Eigen::MatrixXd y = testing::random_normal(rng, 3, 25);
    for (int k = 0; k < 10; ++k) y(static_cast<Eigen::Index>(rng() % 3), static_cast<Eigen::Index>(rng() % 25)) = std::nan("");
    FillOptions opt;
    opt.hyper = fixed_exp(1.0, 3.0, 0.2);
    const auto p = series_panel(y);
    const auto r = fill_missing(p, opt);
    for (Eigen::Index i = 0; i < 3; ++i)
      for (Eigen::Index j = 0; j < 25; ++j)
        if (!std::isnan(y(i, j))) {
          EXPECT_EQ(std::memcmp(&y(i, j), &r.panel.values(i, j), sizeof(double)), 0);
        }
    const auto again = fill_missing(r.panel, opt);
    EXPECT_TRUE(again.diagnostics.empty());
    EXPECT_TRUE((again.panel.values.array() == r.panel.values.array()).all());
  }
}

TEST(Fit, HandValues) {
  Eigen::MatrixXd y(2, 1), f(2, 1);
  y << 1.0, 3.0;
  f << 1.0, 1.0;
  EXPECT_NEAR(compute_fit(f, y).avg_fit, 100.0 * (1.0 - 2.0 / std::sqrt(2.0)), 1e-12);
  EXPECT_DOUBLE_EQ(compute_fit(y, y).avg_fit, 100.0);
  f << 2.0, 2.0;
  EXPECT_NEAR(compute_fit(f, y).avg_fit, 0.0, 1e-12);
}

TEST(Fit, ConstantColumnExcluded) {
  Eigen::MatrixXd y(2, 2), f(2, 2);
  y << 1.0, 5.0, 3.0, 5.0;
  f = y;
  const auto r = compute_fit(f, y);
  EXPECT_TRUE(std::isnan(r.per_time_fit(1)));
  EXPECT_EQ(r.excluded, 1u);
  EXPECT_DOUBLE_EQ(r.avg_fit, 100.0);
}

TEST(FitProperty, NeverAboveHundred) {
  Rng rng(74);
  for (int draw = 0; draw < 50; ++draw) {
    const Eigen::MatrixXd y = testing::random_normal(rng, 4, 3);
    const Eigen::MatrixXd f = y + 1e-3 * testing::random_normal(rng, 4, 3);
    const auto r = compute_fit(f, y);
    EXPECT_LT(r.per_time_fit.maxCoeff(), 100.0);
    EXPECT_NEAR(r.avg_fit, r.per_time_fit.mean(), 1e-12);
  }
}

TEST(FitPanel, GcvNeedsNoiseSource) {
  Rng rng(75);
  const auto p = series_panel(testing::random_normal(rng, 2, 10));
  FitOptions opt;
  opt.family = TemporalFamily::Exponential;
  opt.method = Method::GCV;
  EXPECT_THROW(fit_panel(p, opt), ConfigError);
}

TEST(FitPanel, RunsAndIsDeterministic) {
  Rng rng(76);
  auto in = testing::random_instance(rng, TemporalFamily::Exponential, 30, 3);
  auto p = series_panel(in.Y);
  p.locations = in.locations;
  p.set_split(25, 5);
  FitOptions opt;
  opt.family = TemporalFamily::Exponential;
  opt.grid = "3";
  opt.n_starts = 2;
  const auto a = fit_panel(p, opt);
  ASSERT_TRUE(a.fit.has_value());
  EXPECT_EQ(a.predicted.fhat.cols(), 5);
  EXPECT_EQ(a.smoothed.fhat.cols(), 25);
  EXPECT_LE(a.cost.value, a.opt.grid_min);
  const auto b = fit_panel(p, opt);
  EXPECT_EQ(a.opt.theta, b.opt.theta);
  EXPECT_TRUE((a.predicted.fhat.array() == b.predicted.fhat.array()).all());

  opt.method = Method::SURE;
  opt.sigma2_from_mlm = true;
  const auto s = fit_panel(p, opt);
  ASSERT_TRUE(s.mlm_stage.has_value());
  EXPECT_DOUBLE_EQ(s.hyper.sigma2, s.mlm_stage->sigma2);
  EXPECT_EQ(s.cost.method, Method::SURE);
}

}  // namespace
}  // namespace stgp
