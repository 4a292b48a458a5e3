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

// Synthetic panels drawn from a known separable GP, so every command-line path
// can run without external data.

#include <cmath>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "stgp/objective.hpp"
#include "stgp/pipeline.hpp"
#include "stgp/realize.hpp"
#include "stgp/stmodel.hpp"

namespace stgp {

struct FixtureOptions {
  Eigen::Index M = 4;
  Eigen::Index T = 60;
  std::uint64_t seed = 1;
  double missing = 0.0;  ///< fraction of cells blanked at random
  Hyper truth = default_truth();

  static Hyper default_truth() {
    Hyper h;
    h.temporal = TemporalKernelSpec(TemporalFamily::Exponential, {{"c", 1.0}, {"sigma_t", 8.0}});
    h.spatial.alpha_se = 4.0;
    h.sigma2 = 0.05;
    return h;
  }
};

/// Locations uniform on [0, 10]^2, times 1..T, field simulated through the
/// block realization, white noise added, then optional random blanks.
inline DataPanel make_fixture(const FixtureOptions& opt) {
  if (opt.M < 1 || opt.T < 2) throw ConfigError("fixture: need M >= 1 and T >= 2");
  if (!(opt.missing >= 0.0 && opt.missing < 1.0)) throw ConfigError("fixture: missing fraction must lie in [0, 1)");
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  DataPanel p;
  p.locations.resize(opt.M, 2);
  for (Eigen::Index i = 0; i < opt.M; ++i) {
    p.locations(i, 0) = 10.0 * unit(rng);
    p.locations(i, 1) = 10.0 * unit(rng);
    p.ids.push_back("L" + std::to_string(i + 1));
  }
  for (Eigen::Index j = 1; j <= opt.T; ++j) p.times.push_back(static_cast<double>(j));

  const TransformedModel model =
      build_transformed_model(realize(opt.truth.temporal, 1.0), eval_spatial_gram(opt.truth.spatial, p.locations),
                              opt.truth.sigma2);
  const Realization& re = model.realization;
  const Eigen::Index r = re.dim();
  // init_cov may be singular; factor through its eigendecomposition
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(re.init_cov);
  const Eigen::MatrixXd root = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  Eigen::MatrixXd z(opt.M, opt.T);
  for (Eigen::Index i = 0; i < opt.M; ++i) {
    Eigen::VectorXd w(r), x;
    for (Eigen::Index k = 0; k < r; ++k) w(k) = normal(rng);
    x = root * w;
    for (Eigen::Index j = 0; j < opt.T; ++j) {
      z(i, j) = model.sqrt_d(i) * re.H.dot(x);
      Eigen::VectorXd v(re.G.cols());
      for (Eigen::Index k = 0; k < v.size(); ++k) v(k) = normal(rng);
      const double scale = re.noise_scale ? re.noise_scale(static_cast<std::size_t>(j + 1)) : 1.0;
      x = re.F * x + std::sqrt(scale) * re.G * v;
    }
  }
  p.values = model.Lambda * z;
  const double sd = std::sqrt(opt.truth.sigma2);
  for (Eigen::Index q = 0; q < p.values.size(); ++q) p.values.data()[q] += sd * normal(rng);
  if (opt.missing > 0.0)
    for (Eigen::Index q = 0; q < p.values.size(); ++q)
      if (unit(rng) < opt.missing) p.values.data()[q] = std::numeric_limits<double>::quiet_NaN();
  p.ts = 1.0;
  p.set_split(-1, 0);
  return p;
}

/// Locations CSV: id then one column per coordinate.
inline void write_locations_csv(std::ostream& os, const DataPanel& p) {
  char buf[64];
  os << "id";
  for (Eigen::Index c = 0; c < p.locations.cols(); ++c) os << ",x" << (c + 1);
  os << "\n";
  for (Eigen::Index i = 0; i < p.M(); ++i) {
    os << p.ids[static_cast<std::size_t>(i)];
    for (Eigen::Index c = 0; c < p.locations.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", p.locations(i, c));
      os << "," << buf;
    }
    os << "\n";
  }
}

}  // namespace stgp
