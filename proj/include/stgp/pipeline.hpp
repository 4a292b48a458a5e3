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

// Panel ingestion, per-location gap filling and the field fit metric.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stgp/error.hpp"
#include "stgp/kalman.hpp"
#include "stgp/objective.hpp"
#include "stgp/optimize.hpp"
#include "stgp/parallel.hpp"

namespace stgp {

/// Observations on a regular time grid, one row per location.
struct DataPanel {
  std::vector<std::string> ids;
  std::vector<double> times;
  Eigen::MatrixXd values;     ///< M x T, NaN where missing
  Eigen::MatrixXd locations;  ///< M x nu
  double ts = 1.0;
  Eigen::Index n_train = 0;
  Eigen::Index n_test = 0;

  Eigen::Index M() const { return values.rows(); }
  Eigen::Index T() const { return values.cols(); }
  MissingMask missing() const { return values.array().isNaN(); }
  Eigen::MatrixXd train() const { return values.leftCols(n_train); }
  Eigen::MatrixXd test() const { return values.middleCols(n_train, n_test); }

  /// Sets (N, N_T); N_T = 0 and N = -1 mean "everything is training data".
  void set_split(Eigen::Index n, Eigen::Index nt) {
    if (n < 0) n = T() - nt;
    if (n < 1 || nt < 0 || n + nt > T())
      throw ConfigError("split (" + std::to_string(n) + ", " + std::to_string(nt) + ") does not fit " +
                        std::to_string(T()) + " samples");
    n_train = n;
    n_test = nt;
  }
};

enum class CoordMode { Raw, Ecef, LatLon };

inline CoordMode coord_mode_from_string(const std::string& s) {
  if (s == "raw") return CoordMode::Raw;
  if (s == "ecef") return CoordMode::Ecef;
  if (s == "latlon") return CoordMode::LatLon;
  throw ConfigError("unknown coordinate mode '" + s + "' (expected raw, ecef or latlon)");
}

struct PanelOptions {
  CoordMode coords = CoordMode::Raw;
  double unit = 1e4;                   ///< metres per coordinate unit for ecef/latlon
  std::optional<double> ts;            ///< overrides the spacing of the time column
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

/// Comma-separated fields; double quotes group, "" escapes a quote.
inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    const char c = line[k];
    if (quoted) {
      if (c == '"' && k + 1 < line.size() && line[k + 1] == '"') {
        cur += '"';
        ++k;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

inline std::optional<double> parse_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const char* b = s.data();
  if (*b == '+') ++b;
  auto [p, ec] = std::from_chars(b, s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

/// Non-empty, non-comment lines with their 1-based line numbers.
inline std::vector<std::pair<std::size_t, std::string>> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::vector<std::pair<std::size_t, std::string>> lines;
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty() || trim(line)[0] == '#') continue;
    lines.emplace_back(no, line);
  }
  return lines;
}

inline Eigen::Vector3d latlon_to_ecef(double lat_deg, double lon_deg) {
  constexpr double a = 6378137.0, f = 1.0 / 298.257223563;  // WGS84
  const double e2 = f * (2.0 - f);
  const double lat = lat_deg * std::numbers::pi / 180.0, lon = lon_deg * std::numbers::pi / 180.0;
  const double n = a / std::sqrt(1.0 - e2 * std::sin(lat) * std::sin(lat));
  return {n * std::cos(lat) * std::cos(lon), n * std::cos(lat) * std::sin(lon), n * (1.0 - e2) * std::sin(lat)};
}

}  // namespace detail

/// Data CSV: header "time,ID1,...,IDM", then one row per time step. Empty
/// cells and NaN are missing. Locations CSV: "ID,x1,...,x_nu" per row, with an
/// optional header line. An empty locations path is accepted for per-location
/// work such as filling.
inline DataPanel load_panel(const std::string& data_path, const std::string& locations_path,
                            const PanelOptions& opt = {}) {
  const auto lines = detail::read_lines(data_path);
  if (lines.empty()) throw InputError(data_path + ": empty file");
  auto header = detail::split_csv(lines[0].second);
  if (header.size() < 2) throw InputError(data_path + ":" + std::to_string(lines[0].first) + ": header needs a time column and at least one location");
  DataPanel p;
  p.ids.assign(header.begin() + 1, header.end());
  {
    std::set<std::string> seen;
    for (const auto& id : p.ids) {
      if (id.empty()) throw InputError(data_path + ":" + std::to_string(lines[0].first) + ": empty location ID");
      if (!seen.insert(id).second)
        throw InputError(data_path + ":" + std::to_string(lines[0].first) + ": duplicate location '" + id + "'");
    }
  }
  const std::size_t m = p.ids.size();
  std::vector<std::vector<double>> cols;
  for (std::size_t k = 1; k < lines.size(); ++k) {
    const auto& [no, text] = lines[k];
    const auto f = detail::split_csv(text);
    const std::string where = data_path + ":" + std::to_string(no);
    if (f.size() != m + 1)
      throw InputError(where + ": expected " + std::to_string(m + 1) + " fields, found " + std::to_string(f.size()));
    const auto t = detail::parse_double(f[0]);
    if (!t || !std::isfinite(*t)) throw InputError(where + ": bad time value '" + f[0] + "'");
    if (!p.times.empty() && !(*t > p.times.back()))
      throw InputError(where + ": time index is not strictly increasing");
    p.times.push_back(*t);
    std::vector<double> col(m);
    for (std::size_t i = 0; i < m; ++i) {
      const std::string& cell = f[i + 1];
      if (cell.empty() || cell == "NaN" || cell == "nan" || cell == "NA") {
        col[i] = std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      const auto v = detail::parse_double(cell);
      if (!v || !std::isfinite(*v)) throw InputError(where + ": bad value '" + cell + "' for " + p.ids[i]);
      col[i] = *v;
    }
    cols.push_back(std::move(col));
  }
  if (cols.empty()) throw InputError(data_path + ": no data rows");
  p.values.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j)
    for (std::size_t i = 0; i < m; ++i) p.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = cols[j][i];

  if (opt.ts) {
    if (!(*opt.ts > 0.0)) throw ConfigError("sampling interval must be > 0");
    p.ts = *opt.ts;
  } else if (p.times.size() > 1) {
    p.ts = p.times[1] - p.times[0];
    for (std::size_t j = 2; j < p.times.size(); ++j)
      if (std::abs(p.times[j] - p.times[j - 1] - p.ts) > 1e-9 * std::max(1.0, std::abs(p.ts)))
        throw InputError(data_path + ": time column is not evenly spaced (row " + std::to_string(j + 1) +
                         "); pass an explicit sampling interval");
  }

  // locations; without a file every location sits at the origin
  if (locations_path.empty()) {
    p.locations = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), 1);
    p.set_split(-1, 0);
    return p;
  }
  const auto loc_lines = detail::read_lines(locations_path);
  std::map<std::string, std::vector<double>> coords;
  std::size_t nu = 0;
  for (std::size_t k = 0; k < loc_lines.size(); ++k) {
    const auto& [no, text] = loc_lines[k];
    const auto f = detail::split_csv(text);
    const std::string where = locations_path + ":" + std::to_string(no);
    if (f.size() < 2) throw InputError(where + ": expected an ID and at least one coordinate");
    std::vector<double> c;
    bool numeric = true;
    for (std::size_t q = 1; q < f.size(); ++q) {
      const auto v = detail::parse_double(f[q]);
      if (!v || !std::isfinite(*v)) {
        numeric = false;
        break;
      }
      c.push_back(*v);
    }
    if (!numeric) {
      if (k == 0) continue;  // header
      throw InputError(where + ": non-numeric coordinate");
    }
    if (nu == 0) nu = c.size();
    if (c.size() != nu)
      throw InputError(where + ": expected " + std::to_string(nu) + " coordinates, found " + std::to_string(c.size()));
    if (!coords.emplace(f[0], std::move(c)).second) throw InputError(where + ": duplicate location '" + f[0] + "'");
  }
  if (coords.size() != m)
    throw InputError(locations_path + ": " + std::to_string(coords.size()) + " locations for " + std::to_string(m) +
                     " data columns");
  const std::size_t out_nu = opt.coords == CoordMode::LatLon ? 3 : nu;
  if (opt.coords == CoordMode::LatLon && nu != 2) throw InputError(locations_path + ": latlon mode needs two coordinates");
  if (opt.coords == CoordMode::Ecef && nu != 3) throw InputError(locations_path + ": ecef mode needs three coordinates");
  if (opt.coords != CoordMode::Raw && !(opt.unit > 0.0)) throw ConfigError("coordinate unit must be > 0");
  p.locations.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(out_nu));
  for (std::size_t i = 0; i < m; ++i) {
    const auto it = coords.find(p.ids[i]);
    if (it == coords.end()) throw InputError(locations_path + ": no coordinates for location '" + p.ids[i] + "'");
    const auto& c = it->second;
    Eigen::VectorXd row(static_cast<Eigen::Index>(out_nu));
    switch (opt.coords) {
      case CoordMode::Raw:
        for (std::size_t q = 0; q < nu; ++q) row(static_cast<Eigen::Index>(q)) = c[q];
        break;
      case CoordMode::Ecef: row = Eigen::Vector3d(c[0], c[1], c[2]) / opt.unit; break;
      case CoordMode::LatLon: row = detail::latlon_to_ecef(c[0], c[1]) / opt.unit; break;
    }
    p.locations.row(static_cast<Eigen::Index>(i)) = row.transpose();
  }
  p.set_split(-1, 0);
  return p;
}

inline void write_panel_csv(std::ostream& os, const std::vector<std::string>& ids, const std::vector<double>& times,
                            const Eigen::MatrixXd& values) {
  char buf[64];
  os << "time";
  for (const auto& id : ids) os << ',' << id;
  os << '\n';
  for (Eigen::Index j = 0; j < values.cols(); ++j) {
    std::snprintf(buf, sizeof buf, "%.17g", times[static_cast<std::size_t>(j)]);
    os << buf;
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
      os << ',';
      if (!std::isnan(values(i, j))) {
        std::snprintf(buf, sizeof buf, "%.17g", values(i, j));
        os << buf;
      }
    }
    os << '\n';
  }
}

// ---------------------------------------------------------------------------
// Gap filling

struct FillOptions {
  TemporalFamily family = TemporalFamily::Exponential;
  std::map<std::string, double> fixed;
  /// Skip the per-location fit and use these parameters (temporal params + sigma2).
  std::optional<Hyper> hyper;
  std::string grid = "5";
  std::size_t n_starts = 5;
  int workers = 1;
};

struct FillDiagnostic {
  std::string id;
  std::size_t filled = 0;
  bool fallback = false;      ///< linear interpolation was used
  std::string message;
  std::map<std::string, double> params;  ///< fitted temporal parameters and sigma2
};

struct FillResult {
  DataPanel panel;
  std::vector<FillDiagnostic> diagnostics;  ///< one per location that had missing training data
};

namespace detail {

/// Linear interpolation between observed neighbours, constant beyond the ends.
inline void interpolate_row(Eigen::Ref<Eigen::RowVectorXd> row) {
  std::vector<Eigen::Index> obs;
  for (Eigen::Index j = 0; j < row.size(); ++j)
    if (!std::isnan(row(j))) obs.push_back(j);
  if (obs.empty()) return;
  for (Eigen::Index j = 0; j < row.size(); ++j) {
    if (!std::isnan(row(j))) continue;
    auto hi = std::lower_bound(obs.begin(), obs.end(), j);
    if (hi == obs.begin()) row(j) = row(obs.front());
    else if (hi == obs.end()) row(j) = row(obs.back());
    else {
      const Eigen::Index b = *hi, a = *(hi - 1);
      const double w = static_cast<double>(j - a) / static_cast<double>(b - a);
      row(j) = (1.0 - w) * row(a) + w * row(b);
    }
  }
}

}  // namespace detail

/// Fills missing training entries location by location: MLM fit of the
/// temporal kernel on the observed entries (mask-aware filter), then the
/// smoothed mean at the masked entries. Observed entries are not touched;
/// the test block is left as is.
inline FillResult fill_missing(const DataPanel& panel, const FillOptions& opt = {}) {
  FillResult res{panel, {}};
  const Eigen::Index n = panel.n_train;
  std::vector<Eigen::Index> todo;
  for (Eigen::Index i = 0; i < panel.M(); ++i) {
    const auto row = panel.values.row(i).head(n);
    const auto nmiss = row.array().isNaN().count();
    if (nmiss == n) throw InputError("location '" + panel.ids[static_cast<std::size_t>(i)] + "' has no training observations");
    if (nmiss > 0) todo.push_back(i);
  }
  res.diagnostics.resize(todo.size());

  parallel_for(todo.size(), opt.workers, [&](std::size_t k) {
    const Eigen::Index i = todo[k];
    FillDiagnostic& diag = res.diagnostics[k];
    diag.id = panel.ids[static_cast<std::size_t>(i)];
    const Eigen::MatrixXd y = panel.values.row(i).head(n);
    const MissingMask mask = y.array().isNaN();
    diag.filled = static_cast<std::size_t>(mask.count());
    Eigen::RowVectorXd filled = y;
    try {
      const Eigen::MatrixXd loc = Eigen::MatrixXd::Zero(1, 1);
      ParamLayout layout(opt.family, opt.fixed, data_scales(y, loc, panel.ts), false, true);
      StObjective obj(layout, loc, y, panel.ts, Method::MLM);
      Eigen::VectorXd theta;
      if (opt.hyper) {
        theta = layout.encode(*opt.hyper);
      } else {
        OptimizeOptions oo;
        oo.n_starts = opt.n_starts;
        theta = optimize([&](const Eigen::VectorXd& t) { return obj(t); }, layout.space(),
                         parse_grid(opt.grid, layout.space()), oo)
                    .theta;
      }
      const Hyper h = obj.decode(theta);
      const TransformedModel model = obj.model(h);
      const auto sm = smoother_pass(model, filter_pass(model, obj.transformed(model), obj.mask()));
      for (Eigen::Index j = 0; j < n; ++j)
        if (mask(0, j)) filled(j) = sm.fhat(0, j);
      if (!filled.allFinite()) throw NumericalError("non-finite smoothed value");
      diag.params = h.temporal.params;
      diag.params["sigma2"] = h.sigma2;
    } catch (const std::exception& e) {
      filled = y;
      detail::interpolate_row(filled);
      diag.fallback = true;
      diag.message = e.what();
    }
    for (Eigen::Index j = 0; j < n; ++j)
      if (mask(0, j)) res.panel.values(i, j) = filled(j);
  });
  return res;
}

// ---------------------------------------------------------------------------
// Fit

struct FitReport {
  Eigen::VectorXd per_time_fit;  ///< NaN where undefined
  double avg_fit = std::numeric_limits<double>::quiet_NaN();
  std::size_t excluded = 0;      ///< samples left out of the average
  Eigen::VectorXd location_rmse;
};

/// fit_j = 100 (1 - ||fhat_j - y_j|| / ||y_j - mean(y_j)||) per column, over
/// the observed entries of y_j.
inline FitReport compute_fit(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& actual) {
  if (pred.rows() != actual.rows() || pred.cols() != actual.cols())
    throw InputError("compute_fit: prediction and test block shapes differ");
  FitReport r;
  const Eigen::Index m = actual.rows(), t = actual.cols();
  r.per_time_fit.setConstant(t, std::numeric_limits<double>::quiet_NaN());
  double sum = 0.0;
  std::size_t used = 0;
  for (Eigen::Index j = 0; j < t; ++j) {
    double mean = 0.0;
    std::size_t cnt = 0;
    for (Eigen::Index i = 0; i < m; ++i)
      if (!std::isnan(actual(i, j))) {
        mean += actual(i, j);
        ++cnt;
      }
    if (cnt == 0) {
      ++r.excluded;
      continue;
    }
    mean /= static_cast<double>(cnt);
    double num = 0.0, den = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (std::isnan(actual(i, j))) continue;
      num += (pred(i, j) - actual(i, j)) * (pred(i, j) - actual(i, j));
      den += (actual(i, j) - mean) * (actual(i, j) - mean);
    }
    if (!(den > 0.0)) {
      ++r.excluded;
      continue;
    }
    r.per_time_fit(j) = 100.0 * (1.0 - std::sqrt(num) / std::sqrt(den));
    sum += r.per_time_fit(j);
    ++used;
  }
  if (used > 0) r.avg_fit = sum / static_cast<double>(used);
  r.location_rmse.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    double s = 0.0;
    std::size_t cnt = 0;
    for (Eigen::Index j = 0; j < t; ++j)
      if (!std::isnan(actual(i, j))) {
        s += (pred(i, j) - actual(i, j)) * (pred(i, j) - actual(i, j));
        ++cnt;
      }
    r.location_rmse(i) = cnt ? std::sqrt(s / static_cast<double>(cnt)) : std::numeric_limits<double>::quiet_NaN();
  }
  return r;
}

// ---------------------------------------------------------------------------
// Fit and predict

struct FitOptions {
  TemporalFamily family = TemporalFamily::TE2Exp;
  std::map<std::string, double> fixed;
  Method method = Method::MLM;
  /// Noise variance for GCV/SURE; with `sigma2_from_mlm` an MLM run supplies it.
  std::optional<double> sigma2;
  bool sigma2_from_mlm = false;
  std::optional<double> alpha_se;  ///< fixes the spatial length scale
  std::map<std::string, std::pair<double, double>> boxes;
  std::string grid = "5";
  std::size_t n_starts = 5;
  int workers = 1;
  bool keep_trace = false;
};

struct FitRun {
  Hyper hyper;
  CostReport cost;
  OptimizeResult opt;
  SearchSpace space;
  std::optional<Hyper> mlm_stage;  ///< the MLM fit that supplied sigma2, if any
  PosteriorField smoothed;
  PosteriorField predicted;
  std::optional<FitReport> fit;    ///< present when the panel has a test block
  std::size_t pinv_count = 0;
};

namespace detail {

inline FitRun fit_stage(const DataPanel& panel, const FitOptions& opt, Method method, std::optional<double> sigma2) {
  const Eigen::MatrixXd y = panel.train();
  if (y.hasNaN()) throw MissingDataError("training data contain missing values; run fill first");
  const bool free_alpha = !opt.alpha_se && panel.M() > 1;
  const bool free_sigma2 = method == Method::MLM && !sigma2;
  ParamLayout layout(opt.family, opt.fixed, data_scales(y, panel.locations, panel.ts), free_alpha, free_sigma2);
  for (const auto& [name, box] : opt.boxes) {
    if (name == "sigma2" && !free_sigma2) continue;
    if (name == "alpha_se" && !free_alpha) continue;
    layout.set_box(name, box.first, box.second);
  }
  StObjective obj(layout, panel.locations, y, panel.ts, method);
  obj.set_alpha_se(opt.alpha_se.value_or(1.0));
  if (sigma2) obj.set_sigma2(*sigma2);

  OptimizeOptions oo;
  oo.n_starts = opt.n_starts;
  oo.workers = opt.workers;
  oo.keep_trace = opt.keep_trace;
  FitRun run;
  run.space = layout.space();
  // grid points and starts run concurrently; each cost evaluation stays serial
  run.opt = optimize([&](const Eigen::VectorXd& t) { return obj(t); }, layout.space(), parse_grid(opt.grid, layout.space()), oo);
  run.hyper = obj.decode(run.opt.theta);
  obj.set_workers(opt.workers);
  run.cost = obj.report(run.opt.theta);
  const TransformedModel model = obj.model(run.hyper);
  run.smoothed = smoother_pass(model, filter_pass(model, obj.transformed(model), nullptr, opt.workers), opt.workers);
  run.predicted = predictor_pass(model, run.smoothed, panel.n_test);
  run.pinv_count = run.smoothed.pinv_count;
  if (panel.n_test > 0) run.fit = compute_fit(run.predicted.fhat, panel.test());
  return run;
}

}  // namespace detail

/// Hyper-parameter estimation on the training block, smoothing, prediction
/// over the test block and the fit report.
inline FitRun fit_panel(const DataPanel& panel, const FitOptions& opt) {
  if (opt.method == Method::MLM) return detail::fit_stage(panel, opt, Method::MLM, opt.sigma2);
  if (opt.sigma2) return detail::fit_stage(panel, opt, opt.method, opt.sigma2);
  if (!opt.sigma2_from_mlm)
    throw ConfigError(std::string(to_string(opt.method)) +
                      " needs a noise variance: pass --sigma2 or --sigma2-from mlm");
  const FitRun mlm = detail::fit_stage(panel, opt, Method::MLM, std::nullopt);
  FitRun run = detail::fit_stage(panel, opt, opt.method, mlm.hyper.sigma2);
  run.mlm_stage = mlm.hyper;
  return run;
}

}  // namespace stgp
