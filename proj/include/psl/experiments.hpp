#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "psl/combinatorics.hpp"
#include "psl/heat1d.hpp"
#include "psl/io.hpp"
#include "psl/norms.hpp"
#include "psl/solver2d.hpp"
#include "psl/solver3d.hpp"

namespace psl {

// ---------------------------------------------------------------------------
// Experiment orchestration shared by the command line tool and the harness.

struct Check {
  std::string name;
  bool pass = true;
  std::string detail;
};

struct Outcome {
  std::string kind;
  std::vector<Check> checks;
  std::vector<std::string> files;  // artifacts written, relative to the output directory
  std::vector<std::string> notes;  // measurements reported without a verdict

  bool pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
  void add(std::string name, bool ok, std::string detail) {
    checks.push_back({std::move(name), ok, std::move(detail)});
  }
};

struct RunControl {
  std::optional<std::filesystem::path> resume;  // checkpoint stem
  bool plots = true;
  int checkpoint_every = 10;  // samples between periodic checkpoints
};

namespace detail {

inline std::string fmt(const char* f, double a) {
  char buf[96];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

inline std::string fmt(const char* f, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

inline InitialSpec initial_2d(const ScenarioConfig& c) {
  if (c.initial.kind == "band") throw InvalidArgument("initial.kind: band data is only available for 3D runs");
  InitialSpec s;
  s.kind = c.initial.kind;
  s.amplitude = c.physics.eps0;
  s.normalization = c.initial.normalization;
  s.mode = c.initial.mode;
  s.modes = c.initial.modes;
  s.decay = c.initial.decay;
  s.seed = c.seed;
  return s;
}

inline Scenario2D scenario_2d(const ScenarioConfig& c) {
  Scenario2D sc;
  sc.grid = c.grid;
  sc.initial = initial_2d(c);
  sc.t_final = c.numerics.t_final;
  sc.dt = c.numerics.dt;
  sc.cadence = c.numerics.cadence;
  sc.advection = c.numerics.advection;
  sc.radius_floor = c.numerics.radius_floor;
  sc.threads = c.threads;
  return sc;
}

inline void write_summary(const Outcome& o, const std::filesystem::path& dir) {
  json j;
  j["kind"] = o.kind;
  j["pass"] = o.pass();
  j["checks"] = json::array();
  for (const auto& c : o.checks) j["checks"].push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  j["notes"] = o.notes;
  j["files"] = o.files;
  write_text(dir / "summary.json", j.dump(2) + "\n");
}

inline std::vector<double> energy_series(const NormReport& rep) {
  const auto n = rep.series("h1_norm");
  const auto c = rep.series("cum_dissipation");
  std::vector<double> e(n.size());
  for (std::size_t i = 0; i < n.size(); ++i) e[i] = n[i] * n[i] + c[i];
  return e;
}

// Plain CSV writer for tables with text cells; numbers use 17 digits.
class Table {
 public:
  explicit Table(std::vector<std::string> cols) : cols_(std::move(cols)) {}
  Table& row() {
    rows_.emplace_back();
    return *this;
  }
  Table& add(const std::string& s) {
    rows_.back().push_back(s);
    return *this;
  }
  Table& add(double v) { return add(format_double(v)); }
  Table& add(long long v) { return add(std::to_string(v)); }
  Table& add(int v) { return add(std::to_string(v)); }
  std::string str() const {
    std::string s;
    for (std::size_t i = 0; i < cols_.size(); ++i) s += (i ? "," : "") + cols_[i];
    s += "\n";
    for (const auto& r : rows_) {
      for (std::size_t i = 0; i < r.size(); ++i) s += (i ? "," : "") + r[i];
      s += "\n";
    }
    return s;
  }

 private:
  std::vector<std::string> cols_;
  std::vector<std::vector<std::string>> rows_;
};

inline std::string alpha_text(const MultiIndex& a) {
  return std::to_string(a[0]) + " " + std::to_string(a[1]) + " " + std::to_string(a[2]);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// 2D simulation with energy audit

inline Outcome run_sim2d(const ScenarioConfig& c, const std::filesystem::path& dir, const RunControl& ctl = {}) {
  Outcome o;
  o.kind = c.kind;
  const auto sc = detail::scenario_2d(c);
  const auto stem = dir / "checkpoint";
  int samples = 0;
  RunHooks hooks;
  hooks.on_sample = [&](const State2D& s, double cum) {
    if (ctl.checkpoint_every > 0 && ++samples % ctl.checkpoint_every == 0)
      save_checkpoint(stem, checkpoint_from_state(s, cum));
  };

  NormReport report(series2d_columns());
  Run2DResult run;
  if (ctl.resume) {
    double cum = 0.0;
    const auto ck = load_checkpoint(*ctl.resume);
    if (!(ck.grid == c.grid)) throw InvalidArgument("resume: checkpoint grid differs from the configured grid");
    const auto state = state_from_checkpoint(ck, cum);
    // Keep the rows already on disk up to the checkpoint so the series stays whole.
    const auto prior = dir / "series.csv";
    if (std::filesystem::exists(prior)) {
      const auto old = read_series(prior);
      if (old.columns == report.columns)
        for (const auto& r : old.rows)
          if (r[0] <= state.t) report.append(r);
    }
    run = run_scenario2d(sc, hooks, &state, cum);
  } else {
    run = run_scenario2d(sc, hooks);
  }
  for (const auto& r : run.report.rows) report.append(r);
  save_checkpoint(stem, checkpoint_from_state(run.final_state, run.cum_dissipation));
  write_series(report, dir / "series.csv");
  o.files = {"series.csv", "checkpoint.json", "checkpoint.bin"};

  const double budget = c.physics.eps0;
  const auto mono = monotonicity_audit(report, budget, c.numerics.rel_tol);
  o.add("energy_budget", mono.pass,
        detail::fmt("worst slack %.3e of budget^2 %.3e", mono.min_slack, budget * budget));
  const auto n = report.series("h1_norm");
  const bool from_start = !report.empty() && report.rows.front()[0] == 0.0;
  if (from_start)
    o.add("final_norm_not_above_initial", n.back() <= n.front(),
          detail::fmt("initial %.17g final %.17g", n.front(), n.back()));
  if (ctl.plots && report.size() >= 2) {
    const auto e = detail::energy_series(report);
    render_energy_plot(report.series("t"), e, budget * budget, "energy and cumulative dissipation",
                       dir / "energy.svg");
    o.files.push_back("energy.svg");
  }
  return o;
}

// ---------------------------------------------------------------------------
// 3D linearized simulation with the analytic-norm monitor

inline Outcome run_sim3d(const ScenarioConfig& c, const std::filesystem::path& dir, const RunControl& ctl = {}) {
  if (ctl.resume) throw InvalidArgument("resume: checkpoints are available for 2D runs only");
  if (c.initial.kind != "band" && c.initial.kind != "zero")
    throw InvalidArgument("initial.kind: 3D runs take band or zero data");
  Outcome o;
  o.kind = c.kind;
  Scenario3D sc;
  sc.grid = c.grid;
  sc.initial.amplitude = c.initial.kind == "zero" ? 0.0 : c.physics.eps0;
  sc.initial.ky_band = c.initial.ky_band;
  sc.initial.seed = c.seed;
  sc.eps1 = c.physics.eps1;
  sc.rho0 = c.physics.rho0;
  sc.t_final = c.numerics.t_final;
  sc.dt = c.numerics.dt;
  sc.cadence = c.numerics.cadence;
  sc.threads = c.threads;
  const auto run = run_scenario3d(sc, c.numerics.rel_tol);
  write_series(run.report, dir / "series.csv");
  o.files = {"series.csv"};
  const double budget = run.report.rows.front().back();
  o.add("monitor_budget", run.monitor_pass,
        detail::fmt("worst margin %.3e of budget %.3e", run.worst_margin, budget));
  if (c.physics.eps1 == 0.0) {
    const auto x = run.report.series("x_norm");
    bool strict = true;
    for (std::size_t i = 1; i < x.size(); ++i)
      if (!(x[i] < x[i - 1])) strict = false;
    o.add("x_norm_strictly_decreasing", strict, "unsheared run");
  } else if (std::isfinite(run.shear.decay_slope)) {
    o.add("shear_decay_certificate", run.shear.decay_slope <= -1.5,
          detail::fmt("fitted slope %.3f, C1 %.3e", run.shear.decay_slope, run.shear.c1));
  }
  if (!c.audit.eps1_scan.empty()) {
    // Reports where the monitor first fails; no verdict, the admissible amplitude is not known.
    detail::Table tab({"eps1", "monitor_pass", "worst_margin", "peak_ratio_after_start", "shear_decay_slope"});
    std::string first_fail = "none";
    for (double e : c.audit.eps1_scan) {
      auto s2 = sc;
      s2.eps1 = e;
      const auto r = run_scenario3d(s2, c.numerics.rel_tol);
      // The margin is smallest at t = 0 by construction, so also report the largest later ratio.
      const auto mon = r.report.series("monitor");
      double peak = 0.0;
      for (std::size_t i = 1; i < mon.size(); ++i) peak = std::max(peak, mon[i] / mon.front());
      tab.row().add(e).add(r.monitor_pass ? "1" : "0").add(r.worst_margin).add(peak).add(r.shear.decay_slope);
      if (!r.monitor_pass && first_fail == "none") first_fail = detail::fmt("%g", e);
    }
    write_text(dir / "eps1_scan.csv", tab.str());
    o.files.push_back("eps1_scan.csv");
    o.notes.push_back("eps1 scan: first monitor failure at " + first_fail);
  }
  if (ctl.plots && run.report.size() >= 2) {
    render_energy_plot(run.report.series("t"), run.report.series("monitor"), budget, "analytic-norm monitor",
                       dir / "monitor.svg");
    o.files.push_back("monitor.svg");
  }
  return o;
}

// ---------------------------------------------------------------------------
// Heat decay rates

inline Outcome run_heat_decay(const ScenarioConfig& c, const std::filesystem::path& dir, const RunControl& ctl = {}) {
  if (ctl.resume) throw InvalidArgument("resume: checkpoints are available for 2D runs only");
  Outcome o;
  o.kind = c.kind;
  const VerticalGrid g(c.grid.z_max, c.grid.nz, c.grid.stretch);
  HeatOptions opt;
  opt.dt = c.numerics.dt;
  opt.t_final = c.numerics.t_final;
  opt.cadence = c.numerics.cadence;
  // Self-similar data z e^{-z^2/4} (nonzero moment) and zero-moment data.
  const auto ss = solve_heat(g, sample_profile(g, [](double z) { return z * std::exp(-z * z / 4.0); }), opt);
  const auto zm =
      solve_heat(g, sample_profile(g, [](double z) { return z * (3.0 - z * z) * std::exp(-0.5 * z * z); }), opt);
  std::vector<HeatState> custom;
  if (!c.initial.profile_csv.empty()) custom = solve_heat(g, read_profile_csv(c.initial.profile_csv, g), opt);
  std::vector<std::string> cols{"t", "self_similar_quantity", "self_similar_wall_gradient", "self_similar_moment",
                                "zero_moment_quantity", "zero_moment_wall_gradient", "zero_moment_moment"};
  if (!custom.empty()) cols.insert(cols.end(), {"profile_quantity", "profile_wall_gradient", "profile_moment"});
  NormReport rep(cols);
  for (std::size_t i = 0; i < ss.size(); ++i) {
    std::vector<double> row{ss[i].t,
                            decay_quantity(g, ss[i].h),
                            std::abs(vertical_derivative(g, ss[i].h, 1)[0]),
                            first_moment(g, ss[i].h),
                            decay_quantity(g, zm[i].h),
                            std::abs(vertical_derivative(g, zm[i].h, 1)[0]),
                            first_moment(g, zm[i].h)};
    if (!custom.empty())
      row.insert(row.end(), {decay_quantity(g, custom[i].h), std::abs(vertical_derivative(g, custom[i].h, 1)[0]),
                             first_moment(g, custom[i].h)});
    rep.append(std::move(row));
  }
  write_series(rep, dir / "series.csv");
  o.files = {"series.csv"};
  const double ta = c.numerics.fit_start, tb = c.numerics.fit_end;
  const auto t = rep.series("t");
  const double s_ss = fit_decay(t, rep.series("self_similar_quantity"), ta, tb);
  const double s_zm = fit_decay(t, rep.series("zero_moment_quantity"), ta, tb);
  const double s_wall = fit_decay(t, rep.series("self_similar_wall_gradient"), ta, tb);
  o.add("self_similar_slope", std::abs(s_ss + 1.5) <= 0.1,
        detail::fmt("fitted %.4f, expected -1.5 +/- 0.1 (wall gradient alone %.4f)", s_ss, s_wall));
  o.add("zero_moment_slope", s_zm <= -1.8, detail::fmt("fitted %.4f, expected <= -1.8", s_zm));
  if (!custom.empty())
    o.notes.push_back(detail::fmt("profile from file: fitted slope %.4f, initial moment %.6g",
                                  fit_decay(t, rep.series("profile_quantity"), ta, tb), rep.rows.front()[9]));
  if (ctl.plots) {
    render_decay_plot(t, rep.series("self_similar_quantity"), ta, tb, "self-similar data", dir / "decay_self_similar.svg");
    render_decay_plot(t, rep.series("zero_moment_quantity"), ta, tb, "zero-moment data", dir / "decay_zero_moment.svg");
    render_decay_plot(t, rep.series("self_similar_wall_gradient"), ta, tb, "self-similar wall gradient",
                      dir / "decay_wall_gradient.svg");
    o.files.insert(o.files.end(), {"decay_self_similar.svg", "decay_zero_moment.svg", "decay_wall_gradient.svg"});
  }
  return o;
}

// ---------------------------------------------------------------------------
// Combinatorial inequality scans

inline Outcome run_inequalities(const ScenarioConfig& c, const std::filesystem::path& dir,
                                const RunControl& ctl = {}) {
  if (ctl.resume) throw InvalidArgument("resume: checkpoints are available for 2D runs only");
  Outcome o;
  o.kind = c.kind;
  const std::vector<Inequality> ids{Inequality::Ineq3, Inequality::Ineq4, Inequality::Ineq5, Inequality::Ineq6};
  const auto& rs = c.audit.r_values;
  const auto& caps = c.audit.caps;
  const std::size_t count = ids.size() * rs.size() * caps.size();
  std::vector<ScanResult> scans(count);
  parallel_for(count, c.threads, [&](std::size_t i) {
    const std::size_t k = i % caps.size(), r = (i / caps.size()) % rs.size(), d = i / (caps.size() * rs.size());
    scans[i] = inequality_scan(ids[d], rs[r], caps[k]);
  });
  detail::Table tab({"inequality", "r", "cap", "constant", "alpha", "beta", "pairs"});
  for (const auto& s : scans)
    tab.row()
        .add(inequality_name(s.id))
        .add(s.r)
        .add(s.cap)
        .add(s.constant)
        .add(detail::alpha_text(s.alpha))
        .add(detail::alpha_text(s.beta))
        .add(s.pairs);
  write_text(dir / "inequalities.csv", tab.str());
  o.files = {"inequalities.csv"};
  for (std::size_t d = 0; d < ids.size(); ++d)
    for (std::size_t r = 0; r < rs.size(); ++r) {
      bool finite = true, same = true;
      const auto& first = scans[(d * rs.size() + r) * caps.size()];
      double lo = first.constant, hi = first.constant;
      for (std::size_t k = 0; k < caps.size(); ++k) {
        const auto& s = scans[(d * rs.size() + r) * caps.size() + k];
        finite = finite && std::isfinite(s.constant);
        same = same && s.constant == first.constant;
        lo = std::min(lo, s.constant);
        hi = std::max(hi, s.constant);
      }
      o.add(inequality_name(ids[d]) + " r=" + detail::fmt("%g", rs[r]), finite && same,
            detail::fmt("constant ranges over [%.17g, %.17g] across caps", lo, hi));
    }
  const double spot = inequality_ratio(Inequality::Ineq3, 0.5, {0, 0, 1}, {0, 0, 0});
  o.add("ineq3 spot value", std::abs(spot - 16.0 / 17.0) <= 1e-12, detail::fmt("value %.17g", spot));
  return o;
}

// ---------------------------------------------------------------------------
// Weighted inequalities on random profile families

inline Outcome run_lemma_audit(const ScenarioConfig& c, const std::filesystem::path& dir, const RunControl& ctl = {}) {
  if (ctl.resume) throw InvalidArgument("resume: checkpoints are available for 2D runs only");
  Outcome o;
  o.kind = c.kind;
  const VerticalGrid g(c.grid.z_max, c.grid.nz, c.grid.stretch);
  const double t = c.audit.t;
  const int n = c.audit.samples;
  detail::Table tab({"inequality", "k", "used", "flagged", "worst_ratio"});

  ProfileAuditParams p_poincare;
  p_poincare.lambda = c.physics.lambda;
  p_poincare.t = t;
  const auto gauss = audit_poincare(
      g, {sample_profile(g, [&](double z) { return std::exp(-z * z / (4.0 * (1.0 + t))); })}, p_poincare);
  const auto family = audit_poincare(g, random_profiles(g, n, c.seed, true, false), p_poincare);
  tab.row().add("poincare_gaussian").add(0).add(gauss.used).add(gauss.flagged).add(gauss.worst_ratio);
  tab.row().add("poincare_random").add(0).add(family.used).add(family.flagged).add(family.worst_ratio);
  const bool sat = gauss.used == 1 && std::abs(gauss.worst_ratio - 1.0) <= 1e-4;
  o.add("poincare_saturation", c.physics.lambda == 1.0 ? sat : true,
        c.physics.lambda == 1.0 ? detail::fmt("gaussian ratio %.10f", gauss.worst_ratio)
                                : std::string("skipped: saturation needs lambda = 1"));
  o.add("poincare_random_family", family.used > 0 && family.worst_ratio <= 1.0 + 1e-6,
        detail::fmt("worst ratio %.10f over %g profiles", family.worst_ratio, double(family.used)));

  const auto wall = random_profiles(g, n, c.seed + 1, true, false);
  const auto zero = random_profiles(g, n, c.seed + 2, true, true);
  for (int k = 0; k <= c.audit.k_max; ++k) {
    ProfileAuditParams p;
    p.lambda = c.audit.lambda_sup;
    p.t = t;
    p.k = k;
    const auto sup = audit_sup_bound(g, wall, p);
    tab.row().add("sup_bound").add(k).add(sup.used).add(sup.flagged).add(sup.fitted_constant);
    o.add("sup_bound k=" + std::to_string(k), sup.used > 0 && std::isfinite(sup.fitted_constant),
          detail::fmt("fitted constant %.6g, flagged %g", sup.fitted_constant, double(sup.flagged)));
    p.lambda = c.audit.lambda_good_unknown;
    p.lambda_tilde = c.physics.lambda_tilde;
    const auto gub = audit_good_unknown_bound(g, zero, p);
    tab.row().add("good_unknown_bound").add(k).add(gub.used).add(gub.flagged).add(gub.fitted_constant);
    o.add("good_unknown_bound k=" + std::to_string(k), gub.used > 0 && std::isfinite(gub.fitted_constant),
          detail::fmt("fitted constant %.6g, flagged %g", gub.fitted_constant, double(gub.flagged)));
  }
  write_text(dir / "lemmas.csv", tab.str());
  o.files = {"lemmas.csv"};
  return o;
}

// ---------------------------------------------------------------------------
// Smoothing ladder and tangential radius

inline constexpr double kLadderStart = 0.1;

inline Outcome run_ladder(const ScenarioConfig& c, const std::filesystem::path& dir, const RunControl& ctl = {}) {
  if (ctl.resume) throw InvalidArgument("resume: checkpoints are available for 2D runs only");
  Outcome o;
  o.kind = c.kind;
  const auto sc = detail::scenario_2d(c);
  std::vector<SpectralField> snaps;
  double t0 = -1.0;
  RunHooks hooks;
  hooks.on_sample = [&](const State2D& s, double) {
    if (s.t < kLadderStart - 1e-12) return;
    if (snaps.empty()) t0 = s.t;
    snaps.push_back(s.u);
  };
  const auto run = run_scenario2d(sc, hooks);
  write_series(run.report, dir / "series.csv");
  o.files = {"series.csv"};
  if (snaps.size() < 10) throw InvalidArgument("numerics: run too short for the ladder (needs 10 snapshots)");
  const double h = sc.dt * sc.cadence;
  std::vector<SpectralField> coarse;
  for (std::size_t i = 0; i < snaps.size(); i += 2) coarse.push_back(snaps[i]);
  const int cap = c.numerics.ladder_cap;
  const auto fine = smoothing_ladder(snaps, t0, h, cap, c.physics.eps0);
  const auto half = smoothing_ladder(coarse, t0, 2.0 * h, cap, c.physics.eps0);
  detail::Table tab({"a_t", "a_x", "a_z", "value", "value_half_cadence"});
  bool finite = true;
  for (std::size_t i = 0; i < fine.entries.size(); ++i) {
    const auto& e = fine.entries[i];
    tab.row().add(e.alpha[0]).add(e.alpha[1]).add(e.alpha[2]).add(e.value).add(half.entries[i].value);
    finite = finite && std::isfinite(e.value) && std::isfinite(half.entries[i].value);
  }
  write_text(dir / "ladder.csv", tab.str());
  o.files.push_back("ladder.csv");
  o.add("ladder_finite", finite, std::to_string(fine.entries.size()) + " entries");
  const double ratio = fine.c0 > 0.0 ? half.c0 / fine.c0 : std::nan("");
  o.add("c0_cadence_stability", std::abs(ratio - 1.0) <= 0.2,
        detail::fmt("C0 %.6g at full cadence, %.6g at half", fine.c0, half.c0));

  const auto t = run.report.series("t");
  const auto rho = run.report.series("radius");
  bool mono = true;
  double prev = -std::numeric_limits<double>::infinity(), at1 = std::nan(""), worst_drop = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < kLadderStart - 1e-12 || t[i] > 5.0 + 1e-12) continue;
    if (!(rho[i] >= prev)) {
      mono = false;
      if (std::isfinite(prev)) worst_drop = std::max(worst_drop, prev - rho[i]);
    }
    prev = rho[i];
    if (std::abs(t[i] - 1.0) < 0.5 * h) at1 = rho[i];
  }
  o.add("radius_nondecreasing", mono, detail::fmt("largest drop %.3e", worst_drop));
  o.add("radius_positive_at_t1", at1 > 0.0, detail::fmt("radius(1) = %.6g", at1));
  return o;
}

// ---------------------------------------------------------------------------

inline Outcome run_experiment(const ScenarioConfig& c, const std::filesystem::path& dir, const RunControl& ctl = {}) {
  std::filesystem::create_directories(dir);
  write_text(dir / "config.json", config_echo(c));
  Outcome o;
  if (c.kind == "sim2d") o = run_sim2d(c, dir, ctl);
  else if (c.kind == "sim3d-linear") o = run_sim3d(c, dir, ctl);
  else if (c.kind == "heat-decay") o = run_heat_decay(c, dir, ctl);
  else if (c.kind == "verify-inequalities") o = run_inequalities(c, dir, ctl);
  else if (c.kind == "lemma-audit") o = run_lemma_audit(c, dir, ctl);
  else if (c.kind == "smoothing-ladder") o = run_ladder(c, dir, ctl);
  else throw InvalidArgument("kind: unknown experiment kind '" + c.kind + "'");
  o.files.insert(o.files.begin(), "config.json");
  o.files.push_back("summary.json");
  detail::write_summary(o, dir);
  return o;
}

/// Re-renders plots from an existing output directory and returns the stored outcome.
inline Outcome render_report(const std::filesystem::path& dir) {
  const auto cfg = parse_config(read_text(dir / "config.json"));
  const auto summary = json::parse(read_text(dir / "summary.json"));
  Outcome o;
  o.kind = cfg.kind;
  for (const auto& c : summary.at("checks"))
    o.add(c.at("name").get<std::string>(), c.at("pass").get<bool>(), c.at("detail").get<std::string>());
  const auto series = dir / "series.csv";
  if (!std::filesystem::exists(series)) return o;
  const auto rep = read_series(series);
  if (cfg.kind == "sim2d" || cfg.kind == "smoothing-ladder") {
    const double b = cfg.physics.eps0 * cfg.physics.eps0;
    render_energy_plot(rep.series("t"), detail::energy_series(rep), b, "energy and cumulative dissipation",
                       dir / "energy.svg");
    o.files.push_back("energy.svg");
  } else if (cfg.kind == "sim3d-linear") {
    render_energy_plot(rep.series("t"), rep.series("monitor"), rep.rows.at(0).back(), "analytic-norm monitor",
                       dir / "monitor.svg");
    o.files.push_back("monitor.svg");
  } else if (cfg.kind == "heat-decay") {
    const auto t = rep.series("t");
    const double ta = cfg.numerics.fit_start, tb = cfg.numerics.fit_end;
    render_decay_plot(t, rep.series("self_similar_quantity"), ta, tb, "self-similar data", dir / "decay_self_similar.svg");
    render_decay_plot(t, rep.series("zero_moment_quantity"), ta, tb, "zero-moment data", dir / "decay_zero_moment.svg");
    o.files.insert(o.files.end(), {"decay_self_similar.svg", "decay_zero_moment.svg"});
  }
  return o;
}

}  // namespace psl
