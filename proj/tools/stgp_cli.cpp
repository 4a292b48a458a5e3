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

// stgp command-line tool.
//
//   stgp fit          estimate hyper-parameters, smooth, predict, score
//   stgp fill         per-location gap filling of the training block
//   stgp oracle-check structured vs dense comparison on random small problems
//   stgp bench        structured vs naive lifted filter timings
//   stgp sysid-demo   spatially distributed FIR identification experiment
//   stgp make-fixture synthetic panel from a known GP
//
// Exit codes: 0 ok, 1 other, 2 configuration, 3 input/IO, 4 numerical,
// 5 tolerance breach.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "stgp/bench.hpp"
#include "stgp/check.hpp"
#include "stgp/fixture.hpp"
#include "stgp/kernel_io.hpp"
#include "stgp/pipeline.hpp"
#include "stgp/sysid.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kOther = 1, kConfig = 2, kInput = 3, kNumerical = 4, kTolerance = 5 };

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

fs::path prepare_out(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw stgp::IoError("cannot create output directory '" + dir + "': " + ec.message());
  return fs::path(dir);
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw stgp::IoError("cannot write '" + p.string() + "'");
  return os;
}

void write_json(const fs::path& p, const json& j) {
  auto os = open_out(p);
  os << j.dump(2) << "\n";
}

/// "name=lo,hi"
std::pair<std::string, std::pair<double, double>> parse_box(const std::string& s) {
  const auto eq = s.find('='), comma = s.find(',', eq == std::string::npos ? 0 : eq);
  if (eq == std::string::npos || comma == std::string::npos)
    throw stgp::ConfigError("--box expects name=lo,hi, got '" + s + "'");
  try {
    std::size_t a = 0, b = 0;
    const std::string lo = s.substr(eq + 1, comma - eq - 1), hi = s.substr(comma + 1);
    const double l = std::stod(lo, &a), h = std::stod(hi, &b);
    if (a != lo.size() || b != hi.size()) throw std::invalid_argument("trailing characters");
    return {s.substr(0, eq), {l, h}};
  } catch (const std::invalid_argument&) {
    throw stgp::ConfigError("--box expects name=lo,hi, got '" + s + "'");
  }
}

json hyper_json(const stgp::Hyper& h) {
  return {{"temporal", stgp::to_json(h.temporal)},
          {"spatial", {{"family", "se"}, {"alpha_se", h.spatial.alpha_se}}},
          {"sigma2", h.sigma2}};
}

json cost_json(const stgp::CostReport& c) {
  return {{"method", std::string(stgp::to_string(c.method))},
          {"value", num(c.value)},
          {"logdet", num(c.logdet)},
          {"quad", num(c.quad)},
          {"S", num(c.S)},
          {"delta", num(c.delta)},
          {"n_obs", c.n_obs},
          {"floored", c.floored}};
}

// ---------------------------------------------------------------------------

struct PanelArgs {
  std::string data, locations, coords = "raw";
  double unit = 1e4;
  std::optional<double> ts;
  Eigen::Index train = -1, test = 0;

  void add(CLI::App* app, bool need_locations) {
    app->add_option("--data", data, "panel CSV: time,ID1,...,IDM")->required();
    auto* loc = app->add_option("--locations", locations, "locations CSV: ID,x1,...");
    if (need_locations) loc->required();
    app->add_option("--coords", coords, "coordinate mode")->check(CLI::IsMember({"raw", "ecef", "latlon"}));
    app->add_option("--unit", unit, "metres per coordinate unit (ecef, latlon)");
    app->add_option("--ts", ts, "sampling interval (default: spacing of the time column)");
    app->add_option("--train", train, "training samples N (default: all but --test)");
    app->add_option("--test", test, "held-out samples N_T at the end");
  }

  stgp::DataPanel load() const {
    stgp::PanelOptions po;
    po.coords = stgp::coord_mode_from_string(coords);
    po.unit = unit;
    po.ts = ts;
    auto p = stgp::load_panel(data, locations, po);
    p.set_split(train, test);
    return p;
  }
};

struct KernelArgs {
  std::string family;
  std::string config;

  explicit KernelArgs(std::string def) : family(std::move(def)) {}

  void add(CLI::App* app) {
    app->add_option("--temporal-kernel", family, "temporal family")
        ->check(CLI::IsMember({"exp", "matern32", "te2exp", "te2exp+matern", "pd", "dc-input"}));
    app->add_option("--kernel-config", config,
                    "kernel spec file (key=value or JSON); params pin components, fixed sets constants");
  }

  /// Family, fixed constants, and pinned components as degenerate boxes.
  void resolve(stgp::TemporalFamily& fam, std::map<std::string, double>& fixed,
               std::map<std::string, std::pair<double, double>>& boxes, bool family_given) const {
    fam = stgp::temporal_family_from_string(family);
    if (config.empty()) return;
    const auto spec = stgp::load_kernel_spec(config);
    if (family_given && spec.family != fam)
      throw stgp::ConfigError("--temporal-kernel " + family + " conflicts with the family in " + config);
    fam = spec.family;
    fixed = spec.fixed;
    for (const auto& [k, v] : spec.params) boxes[k] = {v, v};
  }
};

int workers_from(int flag) { return std::max(1, flag); }

// ---------------------------------------------------------------------------

struct FitCmd {
  PanelArgs panel;
  KernelArgs kernel{"te2exp"};
  std::string spatial = "se", method = "mlm", sigma2_from, out = "stgp_out", grid = "5", fill_kernel;
  std::optional<double> sigma2, alpha_se;
  std::vector<std::string> boxes;
  std::size_t starts = 5;
  int workers = 1;
  bool trace = false, fill_first = false;
  CLI::Option* family_opt = nullptr;

  void add(CLI::App* app) {
    panel.add(app, true);
    kernel.add(app);
    family_opt = app->get_option("--temporal-kernel");
    app->add_option("--spatial-kernel", spatial, "spatial family")->check(CLI::IsMember({"se"}));
    app->add_option("--method", method, "criterion")->check(CLI::IsMember({"mlm", "gcv", "sure"}));
    app->add_option("--sigma2", sigma2, "noise variance (fixed)");
    app->add_option("--sigma2-from", sigma2_from, "take sigma2 from a preliminary fit")->check(CLI::IsMember({"mlm"}));
    app->add_option("--alpha-se", alpha_se, "fix the spatial length scale");
    app->add_option("--box", boxes, "override a search box: name=lo,hi (repeatable)");
    app->add_option("--grid", grid, "points per axis, or name=v1,v2;name=...");
    app->add_option("--starts", starts, "local searches from the best grid points");
    app->add_option("--workers", workers, "worker threads")->envname("STGP_WORKERS");
    app->add_option("--out", out, "output directory");
    app->add_flag("--trace", trace, "write the optimizer trace");
    app->add_flag("--fill-first", fill_first, "fill missing training entries before fitting");
    app->add_option("--fill-kernel", fill_kernel, "temporal family for filling (default: --temporal-kernel)")
        ->check(CLI::IsMember({"exp", "matern32", "te2exp", "te2exp+matern", "pd"}));
  }

  int run() {
    stgp::FitOptions fo;
    kernel.resolve(fo.family, fo.fixed, fo.boxes, family_opt->count() > 0);
    fo.method = stgp::method_from_string(method);
    if (sigma2 && !sigma2_from.empty()) throw stgp::ConfigError("pass either --sigma2 or --sigma2-from, not both");
    fo.sigma2 = sigma2;
    fo.sigma2_from_mlm = sigma2_from == "mlm";
    fo.alpha_se = alpha_se;
    for (const auto& b : boxes) fo.boxes.insert_or_assign(parse_box(b).first, parse_box(b).second);
    fo.grid = grid;
    fo.n_starts = starts;
    fo.workers = workers_from(workers);
    fo.keep_trace = trace;
    if (fo.method != stgp::Method::MLM && !fo.sigma2 && !fo.sigma2_from_mlm)
      throw stgp::ConfigError(method + " needs a noise variance: pass --sigma2 or --sigma2-from mlm");

    const fs::path dir = prepare_out(out);
    stgp::DataPanel p = panel.load();
    if (p.train().hasNaN()) {
      if (!fill_first) throw stgp::MissingDataError("training data contain missing values; rerun with --fill-first or use 'fill'");
      stgp::FillOptions fl;
      fl.family = fill_kernel.empty() ? fo.family : stgp::temporal_family_from_string(fill_kernel);
      if (fl.family == fo.family) fl.fixed = fo.fixed;
      fl.workers = fo.workers;
      auto res = stgp::fill_missing(p, fl);
      p = std::move(res.panel);
      auto os = open_out(dir / "fill_diagnostics.jsonl");
      for (const auto& d : res.diagnostics) os << fill_diag_json(d).dump() << "\n";
    }
    const auto run = stgp::fit_panel(p, fo);

    json j = {{"method", method},
              {"hyper", hyper_json(run.hyper)},
              {"cost", cost_json(run.cost)},
              {"n_train", p.n_train},
              {"n_test", p.n_test},
              {"locations", p.M()},
              {"grid_min", num(run.opt.grid_min)},
              {"grid_points", run.opt.grid_values.size()},
              {"pinv_count", run.pinv_count}};
    json starts_j = json::array();
    for (const auto& s : run.opt.starts)
      starts_j.push_back({{"grid_index", s.grid_index}, {"start_value", num(s.start_value)}, {"value", num(s.value)}, {"evals", s.evals}});
    j["starts"] = starts_j;
    if (run.mlm_stage) j["mlm_stage"] = hyper_json(*run.mlm_stage);
    if (run.fit) j["avg_fit"] = num(run.fit->avg_fit);
    write_json(dir / "hyper.json", j);

    const std::vector<double> t_train(p.times.begin(), p.times.begin() + p.n_train);
    const std::vector<double> t_test(p.times.begin() + p.n_train, p.times.begin() + p.n_train + p.n_test);
    { auto os = open_out(dir / "smoothed.csv"); stgp::write_panel_csv(os, p.ids, t_train, run.smoothed.fhat); }
    { auto os = open_out(dir / "smoothed_var.csv"); stgp::write_panel_csv(os, p.ids, t_train, run.smoothed.field_var); }
    { auto os = open_out(dir / "predicted.csv"); stgp::write_panel_csv(os, p.ids, t_test, run.predicted.fhat); }
    { auto os = open_out(dir / "predicted_var.csv"); stgp::write_panel_csv(os, p.ids, t_test, run.predicted.field_var); }
    if (run.fit) {
      auto os = open_out(dir / "fit_report.csv");
      os << "time,fit\n";
      for (Eigen::Index k = 0; k < run.fit->per_time_fit.size(); ++k)
        os << fmt(t_test[static_cast<std::size_t>(k)]) << ","
           << (std::isnan(run.fit->per_time_fit(k)) ? std::string() : fmt(run.fit->per_time_fit(k))) << "\n";
      auto rs = open_out(dir / "location_rmse.csv");
      rs << "id,rmse\n";
      for (Eigen::Index i = 0; i < p.M(); ++i)
        rs << p.ids[static_cast<std::size_t>(i)] << ","
           << (std::isnan(run.fit->location_rmse(i)) ? std::string() : fmt(run.fit->location_rmse(i))) << "\n";
    }
    if (trace) {
      auto os = open_out(dir / "trace.csv");
      stgp::write_trace_csv(os, run.space, run.opt.trace);
    }
    std::printf("fit: cost %s", fmt(run.cost.value).c_str());
    if (run.fit) std::printf(", average prediction fit %.4f", run.fit->avg_fit);
    std::printf("\nwrote %s\n", dir.string().c_str());
    return kOk;
  }

  static json fill_diag_json(const stgp::FillDiagnostic& d) {
    json j = {{"id", d.id}, {"filled", d.filled}, {"fallback", d.fallback}, {"params", d.params}};
    if (!d.message.empty()) j["message"] = d.message;
    return j;
  }
};

struct FillCmd {
  PanelArgs panel;
  KernelArgs kernel{"exp"};
  std::string out = "stgp_out", grid = "5";
  std::size_t starts = 5;
  int workers = 1;
  CLI::Option* family_opt = nullptr;

  void add(CLI::App* app) {
    panel.add(app, false);
    kernel.add(app);
    family_opt = app->get_option("--temporal-kernel");
    app->add_option("--grid", grid, "points per axis, or name=v1,v2;name=...");
    app->add_option("--starts", starts, "local searches per location");
    app->add_option("--workers", workers, "worker threads")->envname("STGP_WORKERS");
    app->add_option("--out", out, "output directory");
  }

  int run() {
    stgp::FillOptions fo;
    std::map<std::string, std::pair<double, double>> pinned;
    kernel.resolve(fo.family, fo.fixed, pinned, family_opt->count() > 0);
    if (!pinned.empty()) throw stgp::ConfigError("fill does not take pinned parameters; use fixed.* entries");
    fo.grid = grid;
    fo.n_starts = starts;
    fo.workers = workers_from(workers);
    const fs::path dir = prepare_out(out);
    const stgp::DataPanel p = panel.load();
    const auto res = stgp::fill_missing(p, fo);
    {
      auto os = open_out(dir / "filled.csv");
      stgp::write_panel_csv(os, res.panel.ids, res.panel.times, res.panel.values);
    }
    auto os = open_out(dir / "fill_diagnostics.jsonl");
    std::size_t total = 0;
    for (const auto& d : res.diagnostics) {
      os << FitCmd::fill_diag_json(d).dump() << "\n";
      total += d.filled;
    }
    std::printf("fill: %zu cells at %zu locations\n", total, res.diagnostics.size());
    return kOk;
  }
};

struct OracleCmd {
  stgp::OracleCheckOptions opt;
  std::string out;

  void add(CLI::App* app) {
    app->add_option("--instances", opt.instances, "random instances")->check(CLI::PositiveNumber);
    app->add_option("--seed", opt.seed, "random seed");
    app->add_option("--out", out, "optional output directory for oracle_check.json");
  }

  int run() {
    const auto rep = stgp::run_oracle_check(opt);
    json j = {{"instances", rep.instances}, {"per_family", rep.per_family}};
    for (const auto& [q, v] : rep.max_rel) {
      std::printf("%-16s max rel err %-12.3g tol %-8.1g %s\n", q.c_str(), v, rep.tolerance.at(q),
                  rep.passed(q) ? "PASS" : "FAIL");
      j["quantities"][q] = {{"max_rel", num(v)}, {"tolerance", rep.tolerance.at(q)}, {"pass", rep.passed(q)}};
    }
    if (!out.empty()) write_json(prepare_out(out) / "oracle_check.json", j);
    return rep.passed() ? kOk : kTolerance;
  }
};

struct BenchCmd {
  std::string sizes = "200x32,200x64,200x128,400x128,500x64,500x128,500x256", out = "stgp_out";
  int reps = 3;
  Eigen::Index naive_max_m = 128;
  std::uint64_t seed = 1;

  void add(CLI::App* app) {
    app->add_option("--sizes", sizes, "comma-separated NxM pairs");
    app->add_option("--reps", reps, "repeats per point (minimum time is kept)")->check(CLI::PositiveNumber);
    app->add_option("--naive-max-m", naive_max_m, "skip the naive filter above this M");
    app->add_option("--seed", seed, "random seed");
    app->add_option("--out", out, "output directory");
  }

  int run() {
    std::vector<std::pair<Eigen::Index, Eigen::Index>> pts;
    std::stringstream ss(sizes);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      const auto x = tok.find('x');
      try {
        if (x == std::string::npos) throw std::invalid_argument(tok);
        pts.emplace_back(std::stol(tok.substr(0, x)), std::stol(tok.substr(x + 1)));
      } catch (const std::exception&) {
        throw stgp::ConfigError("--sizes expects NxM pairs, got '" + tok + "'");
      }
      if (pts.back().first < 1 || pts.back().second < 1) throw stgp::ConfigError("--sizes: N and M must be positive");
    }
    const fs::path dir = prepare_out(out);
    auto os = open_out(dir / "bench.csv");
    os << "N,M,r,structured_s,filter_core_s,naive_s,speedup\n";
    for (const auto& [n, m] : pts) {
      const auto t = stgp::bench::time_point(n, m, reps, m <= naive_max_m, seed);
      const double speed = std::isnan(t.naive) ? NAN : t.naive / t.structured;
      os << n << "," << m << ",3," << fmt(t.structured) << "," << fmt(t.filter_core) << ","
         << (std::isnan(t.naive) ? "" : fmt(t.naive)) << "," << (std::isnan(speed) ? "" : fmt(speed)) << "\n";
      std::printf("N=%-5ld M=%-5ld structured %.4fs  filter %.4fs  naive %s\n", static_cast<long>(n),
                  static_cast<long>(m), t.structured, t.filter_core,
                  std::isnan(t.naive) ? "-" : (fmt(t.naive) + "s").c_str());
    }
    return kOk;
  }
};

struct SysidCmd {
  Eigen::Index m = 50;
  int seeds = 5;
  std::uint64_t seed = 1;
  stgp::sysid::SimConfig sim;
  stgp::sysid::EstimateOptions est;
  std::string out = "stgp_out";

  void add(CLI::App* app) {
    app->add_option("--M", m, "systems per ensemble")->check(CLI::PositiveNumber);
    app->add_option("--seeds", seeds, "independent ensembles")->check(CLI::PositiveNumber);
    app->add_option("--seed", seed, "first seed");
    app->add_option("--N", sim.N, "samples per system");
    app->add_option("--nb", sim.n_b, "FIR order");
    app->add_option("--snr", sim.snr, "average signal-to-noise ratio");
    app->add_option("--grid", est.grid, "points per axis for both estimators");
    app->add_option("--starts", est.n_starts, "local searches");
    app->add_option("--max-evals", est.max_evals, "evaluations per local search");
    app->add_option("--workers", est.workers, "worker threads")->envname("STGP_WORKERS");
    app->add_option("--out", out, "output directory");
  }

  int run() {
    using namespace stgp::sysid;
    est.workers = workers_from(est.workers);
    const fs::path dir = prepare_out(out);
    auto fits = open_out(dir / "fits.csv");
    fits << "seed,system,fit_spatial_temporal,fit_temporal\n";
    auto summary = open_out(dir / "summary.csv");
    summary << "seed,avg_fit_spatial_temporal,avg_fit_temporal,tail_energy,sigma2\n";
    double sum_st = 0.0, sum_bl = 0.0;
    for (int k = 0; k < seeds; ++k) {
      const std::uint64_t s = seed + static_cast<std::uint64_t>(k);
      const auto ens = generate_ensemble(s, static_cast<int>(m));
      const auto data = simulate_data(ens, sim, s + 1000003);
      const auto st = estimate_spatial_temporal(data, est);
      const auto bl = estimate_temporal_baseline(data, est);
      const auto fs_ = compute_fit_b(st.bhat, data.b_true), fb = compute_fit_b(bl.bhat, data.b_true);
      sum_st += fs_.average;
      sum_bl += fb.average;
      for (Eigen::Index i = 0; i < m; ++i)
        fits << s << "," << (i + 1) << "," << fmt(fs_.per_system(i)) << "," << fmt(fb.per_system(i)) << "\n";
      summary << s << "," << fmt(fs_.average) << "," << fmt(fb.average) << "," << fmt(data.tail_energy) << ","
              << fmt(data.sigma2) << "\n";
      write_json(dir / ("ensemble_" + std::to_string(s) + ".json"), ensemble_json(ens, st));
      auto ps = open_out(dir / ("panel_" + std::to_string(s) + ".csv"));
      stgp::write_panel_csv(ps, data.panel.ids, data.panel.times, data.panel.values);
      std::printf("seed %llu: spatial-temporal %.2f, temporal %.2f\n", static_cast<unsigned long long>(s),
                  fs_.average, fb.average);
    }
    const double mst = sum_st / seeds, mbl = sum_bl / seeds;
    std::printf("mean fit: spatial-temporal %.2f, temporal %.2f\n", mst, mbl);
    return mst > mbl ? kOk : kTolerance;
  }

  static json ensemble_json(const stgp::sysid::Ensemble& e, const stgp::sysid::FirEstimate& st) {
    auto roots = [](const std::vector<std::complex<double>>& r) {
      json a = json::array();
      for (const auto& z : r) a.push_back({z.real(), z.imag()});
      return a;
    };
    json locs = json::array();
    for (Eigen::Index i = 0; i < e.locations.rows(); ++i) {
      json row = json::array();
      for (Eigen::Index c = 0; c < e.locations.cols(); ++c) row.push_back(e.locations(i, c));
      locs.push_back(row);
    }
    return {{"base", {{"poles", roots(e.base.poles)}, {"zeros", roots(e.base.zeros)}, {"gain", e.base.gain}}},
            {"attempts", e.attempts},
            {"locations", locs},
            {"spatial_temporal_hyper", hyper_json(st.hyper.front())}};
  }
};

struct FixtureCmd {
  stgp::FixtureOptions opt;
  std::string out = "fixture";

  void add(CLI::App* app) {
    app->add_option("--M", opt.M, "locations")->check(CLI::PositiveNumber);
    app->add_option("--T", opt.T, "time steps (training plus test)");
    app->add_option("--seed", opt.seed, "random seed");
    app->add_option("--missing", opt.missing, "fraction of blank cells");
    app->add_option("--out", out, "output directory");
  }

  int run() {
    const fs::path dir = prepare_out(out);
    const auto p = stgp::make_fixture(opt);
    { auto os = open_out(dir / "data.csv"); stgp::write_panel_csv(os, p.ids, p.times, p.values); }
    { auto os = open_out(dir / "locations.csv"); stgp::write_locations_csv(os, p); }
    write_json(dir / "truth.json", hyper_json(opt.truth));
    std::printf("fixture: %ld locations x %ld samples in %s\n", static_cast<long>(p.M()), static_cast<long>(p.T()),
                dir.string().c_str());
    return kOk;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spatio-temporal GP regression through Kronecker-structured state-space models", "stgp"};
  app.set_config("--config", "", "TOML/INI file with option values; unknown keys are rejected");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);

  FitCmd fit;
  FillCmd fill;
  OracleCmd oracle;
  BenchCmd bench;
  SysidCmd sysid;
  FixtureCmd fixture;
  fit.add(app.add_subcommand("fit", "estimate hyper-parameters, smooth, predict and score"));
  fill.add(app.add_subcommand("fill", "fill missing training entries location by location"));
  oracle.add(app.add_subcommand("oracle-check", "compare the structured path with the dense oracle"));
  bench.add(app.add_subcommand("bench", "time the structured and naive filters"));
  sysid.add(app.add_subcommand("sysid-demo", "spatially distributed FIR identification experiment"));
  fixture.add(app.add_subcommand("make-fixture", "write a synthetic panel"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    if (app.got_subcommand("fit")) return fit.run();
    if (app.got_subcommand("fill")) return fill.run();
    if (app.got_subcommand("oracle-check")) return oracle.run();
    if (app.got_subcommand("bench")) return bench.run();
    if (app.got_subcommand("sysid-demo")) return sysid.run();
    if (app.got_subcommand("make-fixture")) return fixture.run();
  } catch (const stgp::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfig;
  } catch (const stgp::InputError& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return kInput;
  } catch (const stgp::IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return kInput;
  } catch (const stgp::NumericalError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return kNumerical;
  } catch (const stgp::ToleranceError& e) {
    std::fprintf(stderr, "tolerance breach: %s\n", e.what());
    return kTolerance;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kOther;
  }
  return kOther;
}
