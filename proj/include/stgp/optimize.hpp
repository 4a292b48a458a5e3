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

// Multi-start box-constrained Nelder-Mead.
//
// Every parameter is mapped to [0, 1] (through log for positive components);
// the simplex lives in that cube and trial points are clamped onto it.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stgp/error.hpp"
#include "stgp/parallel.hpp"

namespace stgp {

struct ParamDef {
  std::string name;
  double lo = 0.0;
  double hi = 1.0;
  bool log = false;
};

struct SearchSpace {
  std::vector<ParamDef> params;

  std::size_t size() const { return params.size(); }

  void validate() const {
    if (params.empty()) throw ConfigError("search space is empty");
    for (const auto& p : params) {
      if (!std::isfinite(p.lo) || !std::isfinite(p.hi) || !(p.lo <= p.hi))
        throw ConfigError("box for '" + p.name + "' must be finite with lo <= hi");
      if (p.log && !(p.lo > 0.0)) throw ConfigError("log-scaled parameter '" + p.name + "' needs lo > 0");
    }
  }

  std::size_t index_of(const std::string& name) const {
    for (std::size_t k = 0; k < params.size(); ++k)
      if (params[k].name == name) return k;
    throw ConfigError("unknown hyper-parameter '" + name + "'");
  }

  double to_unit(std::size_t k, double v) const {
    const auto& p = params[k];
    if (p.hi == p.lo) return 0.0;
    return p.log ? (std::log(v) - std::log(p.lo)) / (std::log(p.hi) - std::log(p.lo)) : (v - p.lo) / (p.hi - p.lo);
  }

  double from_unit(std::size_t k, double u) const {
    const auto& p = params[k];
    u = std::clamp(u, 0.0, 1.0);
    if (p.hi == p.lo) return p.lo;
    if (u == 1.0) return p.hi;  // exact endpoints, no round trip through exp/log
    if (u == 0.0) return p.lo;
    return p.log ? std::exp(std::log(p.lo) + u * (std::log(p.hi) - std::log(p.lo))) : p.lo + u * (p.hi - p.lo);
  }

  Eigen::VectorXd decode(const Eigen::VectorXd& u) const {
    Eigen::VectorXd x(u.size());
    for (Eigen::Index k = 0; k < u.size(); ++k) x(k) = from_unit(static_cast<std::size_t>(k), u(k));
    return x;
  }

  Eigen::VectorXd encode(const Eigen::VectorXd& x) const {
    Eigen::VectorXd u(x.size());
    for (Eigen::Index k = 0; k < x.size(); ++k) u(k) = to_unit(static_cast<std::size_t>(k), x(k));
    return u;
  }
};

/// Per-component grid values (in parameter units).
struct Grid {
  std::vector<std::vector<double>> axes;

  std::size_t size() const {
    std::size_t n = 1;
    for (const auto& a : axes) n *= a.size();
    return axes.empty() ? 0 : n;
  }

  /// Point number `idx`, last component varying fastest.
  Eigen::VectorXd point(std::size_t idx) const {
    Eigen::VectorXd x(static_cast<Eigen::Index>(axes.size()));
    for (std::size_t k = axes.size(); k-- > 0;) {
      x(static_cast<Eigen::Index>(k)) = axes[k][idx % axes[k].size()];
      idx /= axes[k].size();
    }
    return x;
  }
};

/// Evenly spaced (log-spaced for log parameters) values across each box.
inline Grid default_grid(const SearchSpace& space, std::size_t points_per_dim = 5) {
  if (points_per_dim == 0) throw ConfigError("grid needs at least one point per dimension");
  Grid g;
  for (std::size_t k = 0; k < space.size(); ++k) {
    std::vector<double> axis;
    if (space.params[k].lo == space.params[k].hi || points_per_dim == 1) {
      axis.push_back(space.from_unit(k, points_per_dim == 1 ? 0.5 : 0.0));
    } else {
      for (std::size_t q = 0; q < points_per_dim; ++q)
        axis.push_back(space.from_unit(k, static_cast<double>(q) / static_cast<double>(points_per_dim - 1)));
    }
    g.axes.push_back(std::move(axis));
  }
  return g;
}

/// Grid spec: either a count ("5") or explicit axes "name=v1,v2;name2=w1,w2".
/// Components not listed in an explicit spec get the default 5-point axis.
inline Grid parse_grid(const std::string& spec, const SearchSpace& space) {
  auto trim = [](std::string s) {
    s.erase(0, s.find_first_not_of(" \t"));
    s.erase(s.find_last_not_of(" \t") + 1);
    return s;
  };
  const std::string s = trim(spec);
  if (s.empty()) return default_grid(space);
  if (s.find('=') == std::string::npos) {
    std::size_t pos = 0;
    long n = 0;
    try {
      n = std::stol(s, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != s.size() || n < 1) throw ConfigError("grid spec '" + spec + "': expected a positive count");
    return default_grid(space, static_cast<std::size_t>(n));
  }
  Grid g = default_grid(space);
  std::stringstream items(s);
  std::string item;
  while (std::getline(items, item, ';')) {
    item = trim(item);
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError("grid spec item '" + item + "' lacks '='");
    const std::size_t k = space.index_of(trim(item.substr(0, eq)));
    std::vector<double> axis;
    std::stringstream vals(item.substr(eq + 1));
    std::string v;
    while (std::getline(vals, v, ',')) {
      std::size_t pos = 0;
      double x = 0.0;
      try {
        x = std::stod(trim(v), &pos);
      } catch (const std::exception&) {
        throw ConfigError("grid spec: bad number '" + v + "' for " + space.params[k].name);
      }
      const auto& p = space.params[k];
      if (x < p.lo || x > p.hi)
        throw ConfigError("grid spec: value " + v + " for " + p.name + " lies outside its box");
      axis.push_back(x);
    }
    if (axis.empty()) throw ConfigError("grid spec: empty axis for " + space.params[k].name);
    g.axes[k] = std::move(axis);
  }
  return g;
}

struct NelderMeadOptions {
  int max_evals = 400;
  double f_tol = 1e-10;  ///< spread of simplex values, relative to 1 + |f_best|
  double x_tol = 1e-9;   ///< simplex diameter in unit coordinates
  double initial_step = 0.1;
};

struct TraceRow {
  std::size_t start = 0;
  std::size_t iteration = 0;
  double cost = 0.0;
  Eigen::VectorXd theta;
};

struct LocalResult {
  Eigen::VectorXd u;  ///< unit coordinates
  double value = std::numeric_limits<double>::infinity();
  int evals = 0;
};

/// Cost in unit coordinates; failures (exceptions, NaN) map to +inf.
using UnitCost = std::function<double(const Eigen::VectorXd&)>;

inline LocalResult nelder_mead_box(const UnitCost& f, Eigen::VectorXd u0, const NelderMeadOptions& opt,
                                   const std::function<void(const Eigen::VectorXd&, double)>& on_iter = {}) {
  const Eigen::Index n = u0.size();
  u0 = u0.cwiseMax(0.0).cwiseMin(1.0);
  int evals = 0;
  auto eval = [&](const Eigen::VectorXd& u) {
    ++evals;
    return f(u);
  };
  auto project = [](Eigen::VectorXd u) { return Eigen::VectorXd(u.cwiseMax(0.0).cwiseMin(1.0)); };

  std::vector<Eigen::VectorXd> pts(static_cast<std::size_t>(n + 1), u0);
  std::vector<double> vals(static_cast<std::size_t>(n + 1));
  vals[0] = eval(u0);
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::VectorXd v = u0;
    // step inward when the start sits on the upper face
    v(k) += (u0(k) + opt.initial_step <= 1.0) ? opt.initial_step : -opt.initial_step;
    pts[static_cast<std::size_t>(k + 1)] = project(v);
    vals[static_cast<std::size_t>(k + 1)] = eval(pts[static_cast<std::size_t>(k + 1)]);
  }

  std::vector<std::size_t> order(pts.size());
  auto sort = [&] {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    std::vector<Eigen::VectorXd> p2;
    std::vector<double> v2;
    for (auto o : order) {
      p2.push_back(pts[o]);
      v2.push_back(vals[o]);
    }
    pts = std::move(p2);
    vals = std::move(v2);
  };

  sort();
  while (evals < opt.max_evals) {
    if (on_iter) on_iter(pts[0], vals[0]);
    double diam = 0.0;
    for (std::size_t k = 1; k < pts.size(); ++k) diam = std::max(diam, (pts[k] - pts[0]).cwiseAbs().maxCoeff());
    const double spread = vals.back() - vals.front();
    if (diam < opt.x_tol) break;
    if (std::isfinite(spread) && spread <= opt.f_tol * (1.0 + std::abs(vals.front())) && diam < 1e-7) break;

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (Eigen::Index k = 0; k < n; ++k) centroid += pts[static_cast<std::size_t>(k)];
    centroid /= static_cast<double>(n);
    const Eigen::VectorXd& worst = pts.back();

    const Eigen::VectorXd xr = project(centroid + (centroid - worst));
    const double fr = eval(xr);
    if (fr < vals.front()) {
      const Eigen::VectorXd xe = project(centroid + 2.0 * (centroid - worst));
      const double fe = eval(xe);
      if (fe < fr) {
        pts.back() = xe;
        vals.back() = fe;
      } else {
        pts.back() = xr;
        vals.back() = fr;
      }
    } else if (fr < vals[vals.size() - 2]) {
      pts.back() = xr;
      vals.back() = fr;
    } else {
      const bool outside = fr < vals.back();
      const Eigen::VectorXd xc = outside ? project(centroid + 0.5 * (xr - centroid)) : project(centroid + 0.5 * (worst - centroid));
      const double fc = eval(xc);
      if (fc < (outside ? fr : vals.back())) {
        pts.back() = xc;
        vals.back() = fc;
      } else {
        for (std::size_t k = 1; k < pts.size(); ++k) {
          pts[k] = pts[0] + 0.5 * (pts[k] - pts[0]);
          vals[k] = eval(pts[k]);
        }
      }
    }
    sort();
  }
  return {pts[0], vals[0], evals};
}

struct StartResult {
  std::size_t grid_index = 0;
  Eigen::VectorXd start;
  double start_value = 0.0;
  Eigen::VectorXd theta;
  double value = 0.0;
  int evals = 0;
};

struct OptimizeResult {
  Eigen::VectorXd theta;
  double value = std::numeric_limits<double>::infinity();
  double grid_min = std::numeric_limits<double>::infinity();
  std::size_t grid_argmin = 0;
  std::vector<double> grid_values;  ///< +inf where evaluation failed
  std::vector<StartResult> starts;
  std::vector<TraceRow> trace;
};

struct OptimizeOptions {
  std::size_t n_starts = 5;
  int workers = 1;
  NelderMeadOptions local;
  bool keep_trace = false;
};

/// Cost in parameter units. May throw; the point then counts as failed.
using Cost = std::function<double(const Eigen::VectorXd&)>;

inline OptimizeResult optimize(const Cost& cost, const SearchSpace& space, const Grid& grid,
                               const OptimizeOptions& opt = {}) {
  space.validate();
  if (grid.axes.size() != space.size()) throw ConfigError("grid dimension does not match the search space");
  const std::size_t ng = grid.size();
  if (ng == 0) throw ConfigError("optimization grid is empty");
  if (opt.n_starts == 0) throw ConfigError("need at least one start");

  OptimizeResult res;
  res.grid_values.assign(ng, std::numeric_limits<double>::infinity());
  std::vector<std::string> failures(ng);
  parallel_for(ng, opt.workers, [&](std::size_t g) {
    try {
      const double v = cost(grid.point(g));
      if (std::isfinite(v)) res.grid_values[g] = v;
      else failures[g] = "non-finite cost";
    } catch (const std::exception& e) {
      failures[g] = e.what();
    }
  });

  std::vector<std::size_t> ok;
  for (std::size_t g = 0; g < ng; ++g)
    if (std::isfinite(res.grid_values[g])) ok.push_back(g);
  if (ok.empty()) {
    std::string msg = "all " + std::to_string(ng) + " grid evaluations failed:";
    for (std::size_t g = 0; g < std::min<std::size_t>(ng, 10); ++g)
      msg += "\n  point " + std::to_string(g) + ": " + failures[g];
    if (ng > 10) msg += "\n  ...";
    throw OptimizationError(msg);
  }
  std::stable_sort(ok.begin(), ok.end(),
                   [&](std::size_t a, std::size_t b) { return res.grid_values[a] < res.grid_values[b]; });
  res.grid_argmin = ok.front();
  res.grid_min = res.grid_values[ok.front()];

  const std::size_t ns = std::min(opt.n_starts, ok.size());
  res.starts.resize(ns);
  std::vector<std::vector<TraceRow>> traces(ns);
  parallel_for(ns, opt.workers, [&](std::size_t s) {
    const std::size_t g = ok[s];
    const Eigen::VectorXd x0 = grid.point(g);
    UnitCost fu = [&](const Eigen::VectorXd& u) {
      try {
        const double v = cost(space.decode(u));
        return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
      } catch (const std::exception&) {
        return std::numeric_limits<double>::infinity();
      }
    };
    std::size_t it = 0;
    auto on_iter = [&](const Eigen::VectorXd& u, double v) {
      if (opt.keep_trace) traces[s].push_back({s, it, v, space.decode(u)});
      ++it;
    };
    LocalResult lr = nelder_mead_box(fu, space.encode(x0), opt.local, on_iter);
    StartResult& sr = res.starts[s];
    sr.grid_index = g;
    sr.start = x0;
    sr.start_value = res.grid_values[g];
    // decode(encode(x0)) can differ from x0 in the last bits
    if (lr.value <= sr.start_value) {
      sr.theta = space.decode(lr.u);
      sr.value = lr.value;
    } else {
      sr.theta = x0;
      sr.value = sr.start_value;
    }
    sr.evals = lr.evals;
  });
  for (auto& t : traces) res.trace.insert(res.trace.end(), t.begin(), t.end());

  std::size_t best = 0;
  for (std::size_t s = 1; s < ns; ++s)
    if (res.starts[s].value < res.starts[best].value) best = s;
  res.theta = res.starts[best].theta;
  res.value = res.starts[best].value;
  return res;
}

inline void write_trace_csv(std::ostream& os, const SearchSpace& space, const std::vector<TraceRow>& trace) {
  os << "start,iteration,cost";
  for (const auto& p : space.params) os << ',' << p.name;
  os << '\n';
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  for (const auto& r : trace) {
    os << r.start << ',' << r.iteration << ',' << num(r.cost);
    for (Eigen::Index k = 0; k < r.theta.size(); ++k) os << ',' << num(r.theta(k));
    os << '\n';
  }
}

}  // namespace stgp
