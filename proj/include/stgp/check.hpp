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

// Randomized comparison of the structured path with the dense oracle on small
// problems. Shared by the command-line tool and the acceptance suite.

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "stgp/hyper.hpp"
#include "stgp/kalman.hpp"
#include "stgp/objective.hpp"
#include "stgp/oracle.hpp"

namespace stgp {

struct OracleCheckOptions {
  int instances = 24;
  std::uint64_t seed = 1;
  Eigen::Index max_n = 8, max_m = 4, horizon = 3;
  double sigma2_lo = 0.01, sigma2_hi = 10.0;
};

struct OracleCheckReport {
  int instances = 0;
  std::map<std::string, double> max_rel;    ///< worst relative error per quantity
  std::map<std::string, double> tolerance;
  std::map<std::string, int> per_family;    ///< instance count per temporal family

  bool passed(const std::string& q) const { return max_rel.at(q) <= tolerance.at(q); }
  bool passed() const {
    for (const auto& [q, v] : max_rel)
      if (!passed(q)) return false;
    return true;
  }
};

namespace detail {

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

inline double rel_err(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.size() == 0) return 0.0;
  return (a - b).cwiseAbs().maxCoeff() / std::max(b.cwiseAbs().maxCoeff(), 1e-300);
}

}  // namespace detail

/// Instance k uses temporal family k mod 6, N in [2, max_n], M in [1, max_m],
/// in-box hyper-parameters and log-uniform sigma2.
inline OracleCheckReport run_oracle_check(const OracleCheckOptions& opt = {}) {
  static const TemporalFamily families[] = {TemporalFamily::Exponential, TemporalFamily::Matern32,
                                            TemporalFamily::TE2Exp, TemporalFamily::TE2ExpPlusMatern,
                                            TemporalFamily::PD, TemporalFamily::DCInputConvolved};
  OracleCheckReport rep;
  rep.tolerance = {{"logdet", 1e-8}, {"quad", 1e-8}, {"mlm_cost", 1e-6}, {"delta", 1e-6}, {"S", 1e-6},
                   {"smoothed_mean", 1e-6}, {"predicted_mean", 1e-6}, {"smoothed_var", 1e-6},
                   {"predicted_var", 1e-6}, {"fd_logdet", 1e-4}, {"fd_quad", 1e-4}};
  for (const auto& [q, t] : rep.tolerance) rep.max_rel[q] = 0.0;
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto bump = [&](const std::string& q, double v) { rep.max_rel[q] = std::max(rep.max_rel[q], std::isnan(v) ? INFINITY : v); };

  for (int k = 0; k < opt.instances; ++k) {
    const TemporalFamily fam = families[k % 6];
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(unit(rng) * double(opt.max_n - 1));
    const Eigen::Index m = 1 + static_cast<Eigen::Index>(unit(rng) * double(opt.max_m));
    DataScales scales;
    scales.n_time = double(n);
    ParamLayout layout(fam, {}, scales, true, false);
    Eigen::VectorXd u(layout.space().size());
    for (Eigen::Index q = 0; q < u.size(); ++q) u(q) = unit(rng);
    Hyper h = layout.decode(layout.space().decode(u));
    h.sigma2 = std::exp(std::log(opt.sigma2_lo) + unit(rng) * std::log(opt.sigma2_hi / opt.sigma2_lo));

    Eigen::MatrixXd loc(m, 2), y(m, n);
    for (Eigen::Index q = 0; q < loc.size(); ++q) loc.data()[q] = unit(rng);
    for (Eigen::Index q = 0; q < y.size(); ++q) y.data()[q] = normal(rng);
    const Eigen::MatrixXd ks = eval_spatial_gram(h.spatial, loc);
    const TransformedModel model = build_transformed_model(realize(h.temporal, 1.0), ks, h.sigma2);
    const Eigen::MatrixXd l = transform_outputs(model, y);

    const CostReport mlm = mlm_cost(model, l);
    const GcvSure gs = gcv_sure_costs(model, l);
    const PosteriorField sm = smoother_pass(model, filter_pass(model, l));
    const PosteriorField pr = predictor_pass(model, sm, opt.horizon);
    const FiniteDiffDiagnostics fd = finite_diff_check(model, l, 1e-4 * h.sigma2);

    const Eigen::MatrixXd kt_all = oracle::temporal_gram(h.temporal, n + opt.horizon);
    const oracle::DenseProblem dp{kt_all.topLeftCorner(n, n), ks, h.sigma2, oracle::DenseProblem::stack(y)};
    const auto dm = oracle::dense_mlm(dp);
    const auto ds = oracle::dense_delta_S(dp);
    const auto post = oracle::dense_posterior(dp, kt_all);

    bump("logdet", detail::rel_err(mlm.logdet, dm.logdet));
    bump("quad", detail::rel_err(mlm.quad, dm.quad));
    bump("mlm_cost", detail::rel_err(mlm.value, dm.cost));
    bump("delta", detail::rel_err(gs.gcv.delta, ds.delta));
    bump("S", detail::rel_err(gs.gcv.S, ds.S));
    bump("smoothed_mean", detail::rel_err(sm.fhat, post.mean.leftCols(n)));
    bump("predicted_mean", detail::rel_err(pr.fhat, post.mean.rightCols(opt.horizon)));
    bump("smoothed_var", detail::rel_err(sm.field_var, post.var.leftCols(n)));
    bump("predicted_var", detail::rel_err(pr.field_var, post.var.rightCols(opt.horizon)));
    bump("fd_logdet", fd.rel_err_logdet);
    bump("fd_quad", fd.rel_err_quad);
    ++rep.per_family[std::string(to_string(fam))];
    ++rep.instances;
  }
  return rep;
}

}  // namespace stgp
