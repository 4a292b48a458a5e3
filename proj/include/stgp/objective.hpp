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

// Hyper-parameter layout theta = [temporal..., alpha_se, sigma2] and the
// cost function built on top of it.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stgp/error.hpp"
#include "stgp/hyper.hpp"
#include "stgp/kernels.hpp"
#include "stgp/optimize.hpp"
#include "stgp/realize.hpp"
#include "stgp/stmodel.hpp"

namespace stgp {

/// Quantities used to centre the default boxes on the data.
struct DataScales {
  double var_y = 1.0;        ///< variance of the observations
  double ts = 1.0;           ///< sampling interval
  double n_time = 100.0;     ///< number of time steps
  double sq_dist = 1.0;      ///< median nonzero squared distance between locations
};

inline DataScales data_scales(const Eigen::MatrixXd& y, const Eigen::MatrixXd& locations, double ts) {
  DataScales s;
  s.ts = ts;
  s.n_time = static_cast<double>(y.cols());
  double sum = 0.0, sum2 = 0.0;
  std::size_t n = 0;
  for (Eigen::Index k = 0; k < y.size(); ++k) {
    const double v = y.data()[k];
    if (std::isnan(v)) continue;
    sum += v;
    sum2 += v * v;
    ++n;
  }
  if (n > 1) {
    const double mean = sum / static_cast<double>(n);
    s.var_y = std::max(sum2 / static_cast<double>(n) - mean * mean, 0.0);
  }
  if (!(s.var_y > 0.0)) s.var_y = 1.0;
  std::vector<double> d2;
  for (Eigen::Index i = 0; i < locations.rows(); ++i)
    for (Eigen::Index j = i + 1; j < locations.rows(); ++j) {
      const double v = (locations.row(i) - locations.row(j)).squaredNorm();
      if (v > 0.0) d2.push_back(v);
    }
  if (!d2.empty()) {
    std::nth_element(d2.begin(), d2.begin() + static_cast<std::ptrdiff_t>(d2.size() / 2), d2.end());
    s.sq_dist = d2[d2.size() / 2];
  }
  return s;
}

struct Hyper {
  TemporalKernelSpec temporal;
  SpatialKernelSpec spatial;
  double sigma2 = 1.0;
};

/// Maps an optimizer vector onto kernel specs.
///
/// For te2exp+matern the free component is h_ratio = h_t / delta_t in
/// [0.01, 0.1]; the kernel sees h_t = h_ratio * delta_t.
class ParamLayout {
 public:
  ParamLayout(TemporalFamily family, std::map<std::string, double> fixed, const DataScales& scales,
              bool free_alpha_s, bool free_sigma2)
      : family_(family), fixed_(std::move(fixed)), free_alpha_s_(free_alpha_s), free_sigma2_(free_sigma2) {
    const double v = scales.var_y, ts = scales.ts, span = std::max(scales.n_time, 2.0) * ts;
    auto amp = [&](const std::string& n) { return ParamDef{n, 1e-3 * v, 10.0 * v, true}; };
    auto scale = [&](const std::string& n, double lo, double hi) { return ParamDef{n, lo, hi, true}; };
    for (const auto& n : free_parameter_names(family)) {
      if (n == "c" || n == "delta_t") space_.params.push_back(amp(n));
      else if (n == "h_t" && family == TemporalFamily::TE2ExpPlusMatern)
        space_.params.push_back({"h_ratio", 0.01, 0.1, false});
      else if (n == "h_t") space_.params.push_back(amp(n));
      else if (n == "sigma_t" && family == TemporalFamily::PD) space_.params.push_back(scale(n, ts, 100.0 * span));
      else if (n == "sigma_t" || n == "theta_t") space_.params.push_back(scale(n, 0.5 * ts, 10.0 * span));
      else if (n == "c_t") space_.params.push_back({n, 0.0, 0.95, false});
      else if (n == "lambda_t") space_.params.push_back({n, 0.3, 0.99, false});
      else if (n == "rho_t") space_.params.push_back({n, -0.99, 0.99, false});
      else throw ConfigError("no default box for parameter '" + n + "'");
    }
    n_temporal_ = space_.size();
    if (free_alpha_s_) space_.params.push_back(scale("alpha_se", 0.1 * scales.sq_dist, 10.0 * scales.sq_dist));
    if (free_sigma2_) space_.params.push_back(scale("sigma2", 1e-4 * v, 2.0 * v));
  }

  const SearchSpace& space() const { return space_; }
  SearchSpace& space() { return space_; }
  TemporalFamily family() const { return family_; }
  bool free_alpha_s() const { return free_alpha_s_; }
  bool free_sigma2() const { return free_sigma2_; }

  /// Overrides a default box; `name` must be a component of the layout.
  void set_box(const std::string& name, double lo, double hi) {
    auto& p = space_.params[space_.index_of(name)];
    p.lo = lo;
    p.hi = hi;
    if (p.log && !(lo > 0.0)) p.log = false;
    space_.validate();
  }

  /// `alpha_se` and `sigma2` are used when the layout does not free them.
  Hyper decode(const Eigen::VectorXd& theta, double alpha_se = 1.0, double sigma2 = 1.0) const {
    if (static_cast<std::size_t>(theta.size()) != space_.size())
      throw ConfigError("hyper-parameter vector has wrong length");
    std::map<std::string, double> params;
    const auto& names = free_parameter_names(family_);
    for (std::size_t k = 0; k < n_temporal_; ++k) {
      const std::string& n = names[k];
      double x = theta(static_cast<Eigen::Index>(k));
      if (space_.params[k].name == "h_ratio") x *= theta(static_cast<Eigen::Index>(space_.index_of("delta_t")));
      params[n] = x;
    }
    Hyper h{TemporalKernelSpec(family_, params, fixed_), SpatialKernelSpec{}, sigma2};
    h.spatial.alpha_se = alpha_se;
    Eigen::Index k = static_cast<Eigen::Index>(n_temporal_);
    if (free_alpha_s_) h.spatial.alpha_se = theta(k++);
    if (free_sigma2_) h.sigma2 = theta(k++);
    return h;
  }

  /// Inverse of decode for the free components.
  Eigen::VectorXd encode(const Hyper& h) const {
    Eigen::VectorXd theta(static_cast<Eigen::Index>(space_.size()));
    const auto& names = free_parameter_names(family_);
    for (std::size_t k = 0; k < n_temporal_; ++k) {
      double x = h.temporal.get(names[k]);
      if (space_.params[k].name == "h_ratio") x /= h.temporal.get("delta_t");
      theta(static_cast<Eigen::Index>(k)) = x;
    }
    Eigen::Index k = static_cast<Eigen::Index>(n_temporal_);
    if (free_alpha_s_) theta(k++) = h.spatial.alpha_se;
    if (free_sigma2_) theta(k++) = h.sigma2;
    return theta;
  }

 private:
  TemporalFamily family_;
  std::map<std::string, double> fixed_;
  bool free_alpha_s_;
  bool free_sigma2_;
  SearchSpace space_;
  std::size_t n_temporal_ = 0;
};

/// Builds the transformed model and evaluates one criterion.
class StObjective {
 public:
  /// `y` is M x N without missing values, or 1 x N with NaN for missing
  /// entries (single-location fill).
  StObjective(ParamLayout layout, Eigen::MatrixXd locations, Eigen::MatrixXd y, double ts, Method method)
      : layout_(std::move(layout)), locations_(std::move(locations)), y_(std::move(y)), ts_(ts), method_(method) {
    if (locations_.rows() != y_.rows()) throw InputError("objective: locations and data disagree on M");
    if (y_.hasNaN()) {
      if (y_.rows() != 1) throw MissingDataError("objective: missing values are only supported for one location");
      if (method_ != Method::MLM) throw ConfigError("objective: missing values require the mlm method");
      mask_ = y_.array().isNaN();
      y_ = mask_->select(0.0, y_.array()).matrix();
    }
    if (method_ != Method::MLM && layout_.free_sigma2())
      throw ConfigError("GCV/SURE need a fixed noise variance; sigma2 cannot be a free parameter");
  }

  void set_alpha_se(double a) { alpha_se_ = a; }
  void set_sigma2(double s) { sigma2_ = s; }
  void set_workers(int w) { workers_ = w; }

  const ParamLayout& layout() const { return layout_; }
  Method method() const { return method_; }

  Hyper decode(const Eigen::VectorXd& theta) const { return layout_.decode(theta, alpha_se_, sigma2_); }

  TransformedModel model(const Hyper& h) const {
    h.temporal.validate();
    h.spatial.validate();
    const Eigen::MatrixXd ks = eval_spatial_gram(h.spatial, locations_);
    return build_transformed_model(realize(h.temporal, ts_), ks, h.sigma2, ts_);
  }

  Eigen::MatrixXd transformed(const TransformedModel& m) const { return m.Lambda.transpose() * y_; }
  const MissingMask* mask() const { return mask_ ? &*mask_ : nullptr; }

  CostReport report(const Eigen::VectorXd& theta) const {
    const TransformedModel m = model(decode(theta));
    const Eigen::MatrixXd l = transformed(m);
    if (method_ == Method::MLM) return mlm_cost(m, l, mask(), workers_);
    return evaluate_cost(method_, m, l, workers_);
  }

  double operator()(const Eigen::VectorXd& theta) const { return report(theta).value; }

 private:
  ParamLayout layout_;
  Eigen::MatrixXd locations_;
  Eigen::MatrixXd y_;
  std::optional<MissingMask> mask_;
  double ts_;
  Method method_;
  double alpha_se_ = 1.0;
  double sigma2_ = 1.0;
  int workers_ = 1;
};

}  // namespace stgp
