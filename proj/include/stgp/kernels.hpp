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

/// Spatial and temporal kernel families.
///
/// Temporal lags are in physical time units; callers sampling on a grid with
/// interval Ts pass tau = (j - j') * Ts. All specs are plain values and every
/// evaluation function is pure.

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "stgp/error.hpp"

namespace stgp {

enum class SpatialFamily { SE };

struct SpatialKernelSpec {
  SpatialFamily family = SpatialFamily::SE;
  double alpha_se = 1.0;  ///< divides the squared Euclidean distance

  void validate() const {
    if (!(alpha_se > 0.0) || !std::isfinite(alpha_se))
      throw ConfigError("spatial kernel: alpha_se must be positive and finite");
  }
};

enum class TemporalFamily { Exponential, Matern32, TE2Exp, TE2ExpPlusMatern, PD, DCInputConvolved };

inline std::string_view to_string(TemporalFamily f) {
  switch (f) {
    case TemporalFamily::Exponential: return "exp";
    case TemporalFamily::Matern32: return "matern32";
    case TemporalFamily::TE2Exp: return "te2exp";
    case TemporalFamily::TE2ExpPlusMatern: return "te2exp+matern";
    case TemporalFamily::PD: return "pd";
    case TemporalFamily::DCInputConvolved: return "dc-input";
  }
  return "?";
}

inline TemporalFamily temporal_family_from_string(std::string_view s) {
  for (auto f : {TemporalFamily::Exponential, TemporalFamily::Matern32, TemporalFamily::TE2Exp,
                 TemporalFamily::TE2ExpPlusMatern, TemporalFamily::PD,
                 TemporalFamily::DCInputConvolved})
    if (to_string(f) == s) return f;
  throw ConfigError("unknown temporal kernel family '" + std::string(s) + "'");
}

inline bool is_stationary(TemporalFamily f) { return f != TemporalFamily::DCInputConvolved; }

/// Free-parameter names of each family, in canonical order.
///
///   exp            c, sigma_t               c e^{-|tau|/sigma_t}
///   matern32       h_t, theta_t             h (1 + s) e^{-s},  s = sqrt(3)|tau|/theta
///   te2exp         delta_t, c_t             fixed: f, sigma_t
///   te2exp+matern  delta_t, c_t, h_t, theta_t   fixed: f, sigma_t
///   pd             delta_t, sigma_t         fixed: f
///   dc-input       delta_t, lambda_t, rho_t fixed: input_alpha, input_omega0
inline const std::vector<std::string>& free_parameter_names(TemporalFamily f) {
  static const std::map<TemporalFamily, std::vector<std::string>> names = {
      {TemporalFamily::Exponential, {"c", "sigma_t"}},
      {TemporalFamily::Matern32, {"h_t", "theta_t"}},
      {TemporalFamily::TE2Exp, {"delta_t", "c_t"}},
      {TemporalFamily::TE2ExpPlusMatern, {"delta_t", "c_t", "h_t", "theta_t"}},
      {TemporalFamily::PD, {"delta_t", "sigma_t"}},
      {TemporalFamily::DCInputConvolved, {"delta_t", "lambda_t", "rho_t"}},
  };
  return names.at(f);
}

/// Fixed constants and their defaults.
inline std::map<std::string, double> default_fixed(TemporalFamily f) {
  switch (f) {
    case TemporalFamily::TE2Exp:
    case TemporalFamily::TE2ExpPlusMatern: return {{"f", 1.0 / 12.0}, {"sigma_t", 5000.0}};
    case TemporalFamily::PD: return {{"f", 1.0 / 12.0}};
    case TemporalFamily::DCInputConvolved:
      return {{"input_alpha", 1e-2}, {"input_omega0", std::numbers::pi / 8.0}};
    default: return {};
  }
}

struct TemporalKernelSpec {
  TemporalFamily family = TemporalFamily::Exponential;
  std::map<std::string, double> params;
  std::map<std::string, double> fixed;

  TemporalKernelSpec() = default;
  TemporalKernelSpec(TemporalFamily fam, std::map<std::string, double> p,
                     std::map<std::string, double> fx = {})
      : family(fam), params(std::move(p)), fixed(default_fixed(fam)) {
    for (auto& [k, v] : fx) fixed[k] = v;
  }

  /// Looks up a free parameter first, then a fixed constant.
  double get(const std::string& name) const {
    if (auto it = params.find(name); it != params.end()) return it->second;
    if (auto it = fixed.find(name); it != fixed.end()) return it->second;
    throw ConfigError("temporal kernel '" + std::string(to_string(family)) +
                      "': missing parameter '" + name + "'");
  }

  void validate() const {
    for (const auto& n : free_parameter_names(family)) {
      double v = get(n);
      if (std::isnan(v)) throw ConfigError("temporal kernel: parameter '" + n + "' is NaN");
    }
    for (const auto& [k, v] : params) {
      const auto& names = free_parameter_names(family);
      if (std::find(names.begin(), names.end(), k) == names.end())
        throw ConfigError("temporal kernel '" + std::string(to_string(family)) +
                          "': unknown parameter '" + k + "'");
    }
    auto positive = [&](const char* n) {
      if (!(get(n) > 0.0)) throw ConfigError(std::string("temporal kernel: ") + n + " must be > 0");
    };
    switch (family) {
      case TemporalFamily::Exponential: positive("c"); positive("sigma_t"); break;
      case TemporalFamily::Matern32: positive("h_t"); positive("theta_t"); break;
      case TemporalFamily::TE2ExpPlusMatern:
        positive("h_t");
        positive("theta_t");
        if (get("h_t") < 0.01 * get("delta_t") * (1 - 1e-12) ||
            get("h_t") > 0.1 * get("delta_t") * (1 + 1e-12))
          throw ConfigError("temporal kernel: requires 0.01*delta_t <= h_t <= 0.1*delta_t");
        [[fallthrough]];
      case TemporalFamily::TE2Exp:
        positive("delta_t");
        positive("sigma_t");
        if (!(get("c_t") >= 0.0 && get("c_t") < 1.0))
          throw ConfigError("temporal kernel: c_t must lie in [0,1)");
        break;
      case TemporalFamily::PD: positive("delta_t"); positive("sigma_t"); break;
      case TemporalFamily::DCInputConvolved:
        if (!(get("delta_t") >= 0.0)) throw ConfigError("temporal kernel: delta_t must be >= 0");
        if (!(get("lambda_t") >= 0.0 && get("lambda_t") < 1.0))
          throw ConfigError("temporal kernel: lambda_t must lie in [0,1)");
        if (!(std::abs(get("rho_t")) <= 1.0))
          throw ConfigError("temporal kernel: |rho_t| must be <= 1");
        break;
    }
  }
};

// ---------------------------------------------------------------------------
// Spatial

/// Gram matrix over the rows of `locations` (M x nu).
inline Eigen::MatrixXd eval_spatial_gram(const SpatialKernelSpec& spec,
                                         const Eigen::MatrixXd& locations) {
  spec.validate();
  if (locations.rows() == 0) throw InputError("spatial gram: no locations");
  if (!locations.allFinite()) throw InputError("spatial gram: non-finite coordinate");
  const Eigen::Index m = locations.rows();
  Eigen::MatrixXd k(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    k(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < m; ++j) {
      double d2 = (locations.row(i) - locations.row(j)).squaredNorm();
      k(i, j) = k(j, i) = std::exp(-d2 / spec.alpha_se);
    }
  }
  return k;
}

// ---------------------------------------------------------------------------
// Temporal

namespace detail {

inline double te2exp_value(double delta, double c, double f, double sigma_t, double tau) {
  const double a = std::abs(tau);
  const double w = 2.0 * std::numbers::pi * f * a;
  return delta * ((1.0 - c + 0.75 * c * c) + (c - c * c) * std::cos(w) + 0.25 * c * c * std::cos(2.0 * w)) *
         std::exp(-a / sigma_t);
}

inline double matern32_value(double h, double theta, double tau) {
  const double s = std::sqrt(3.0) * std::abs(tau) / theta;
  return h * (1.0 + s) * std::exp(-s);
}

}  // namespace detail

/// Diagonal-correlated kernel delta * lambda^{(t+t')/2} * rho^{|t-t'|}.
inline double eval_dc(double delta, double lambda, double rho, double t1, double t2) {
  return delta * std::pow(lambda, 0.5 * (t1 + t2)) * std::pow(rho, std::abs(t1 - t2));
}

/// k(tau) for a stationary family.
inline double eval_temporal(const TemporalKernelSpec& spec, double tau) {
  if (!std::isfinite(tau)) throw InputError("temporal kernel: non-finite lag");
  switch (spec.family) {
    case TemporalFamily::Exponential:
      return spec.get("c") * std::exp(-std::abs(tau) / spec.get("sigma_t"));
    case TemporalFamily::Matern32:
      return detail::matern32_value(spec.get("h_t"), spec.get("theta_t"), tau);
    case TemporalFamily::TE2Exp:
      return detail::te2exp_value(spec.get("delta_t"), spec.get("c_t"), spec.get("f"),
                                  spec.get("sigma_t"), tau);
    case TemporalFamily::TE2ExpPlusMatern:
      return detail::te2exp_value(spec.get("delta_t"), spec.get("c_t"), spec.get("f"),
                                  spec.get("sigma_t"), tau) +
             detail::matern32_value(spec.get("h_t"), spec.get("theta_t"), tau);
    case TemporalFamily::PD:
      return spec.get("delta_t") * std::cos(2.0 * std::numbers::pi * spec.get("f") * std::abs(tau)) *
             std::exp(-std::abs(tau) / spec.get("sigma_t"));
    case TemporalFamily::DCInputConvolved:
      throw ConfigError("temporal kernel 'dc-input' is not stationary; use eval_temporal_pair");
  }
  throw ConfigError("temporal kernel: unknown family");
}

/// k(t1, t2). For the DC family this is the bare DC kernel (no input convolution).
inline double eval_temporal_pair(const TemporalKernelSpec& spec, double t1, double t2) {
  if (spec.family == TemporalFamily::DCInputConvolved)
    return eval_dc(spec.get("delta_t"), spec.get("lambda_t"), spec.get("rho_t"), t1, t2);
  return eval_temporal(spec, t1 - t2);
}

/// Dense temporal Gram matrix. Only used by oracles and tests.
inline Eigen::MatrixXd eval_temporal_gram(const TemporalKernelSpec& spec,
                                          const std::vector<double>& times) {
  const auto n = static_cast<Eigen::Index>(times.size());
  if (n == 0) throw InputError("temporal gram: no time points");
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!std::isfinite(times[i])) throw InputError("temporal gram: non-finite time");
    for (Eigen::Index j = 0; j <= i; ++j) k(i, j) = k(j, i) = eval_temporal_pair(spec, times[i], times[j]);
  }
  return k;
}

}  // namespace stgp
