// Acceptance harness: one PASS/FAIL line per criterion, exit status 1 when any fails.

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "psl/experiments.hpp"
#include "psl/psl.hpp"
#include "test_util.hpp"

using namespace psl;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;
  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += std::string(ok ? "" : "NOT ") + what;
  }
};

std::string fmt(const char* f, double a) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt(const char* f, double a, double b) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

int hardware_threads() { return int(std::max(1u, std::thread::hardware_concurrency())); }

fs::path workdir(const std::string& name) {
  const auto d = fs::temp_directory_path() / "psl_acceptance" / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

const Check* find_check(const Outcome& o, const std::string& name) {
  for (const auto& c : o.checks)
    if (c.name == name) return &c;
  return nullptr;
}

void require_check(Verdict& v, const Outcome& o, const std::string& name) {
  const Check* c = find_check(o, name);
  v.require(c && c->pass, name + " (" + (c ? c->detail : std::string("missing")) + ")");
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------

Verdict dissipation_identity() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  const auto grid = make_grid(GridConfig{2.0 * kPi, 32, 20.0, 129, 0.0, 2.0 * kPi, 0});
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) worst = std::max(worst, dissipation_residual(testutil::random_field(grid, 100 + s)));
  const double secs = seconds_since(t0);
  v.require(worst <= 1e-10, fmt("worst residual %.3e <= 1e-10", worst));
  v.require(secs < 5.0, fmt("runtime %.2fs < 5s", secs));
  return v;
}

Verdict energy_monotonicity() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  auto c = default_config("sim2d");
  c.threads = hardware_threads();
  RunControl ctl;
  ctl.checkpoint_every = 0;
  const auto o = run_experiment(c, workdir("energy"), ctl);
  const double secs = seconds_since(t0);
  require_check(v, o, "energy_budget");
  require_check(v, o, "final_norm_not_above_initial");
  v.require(secs < 600.0, fmt("runtime %.1fs < 600s", secs));
  return v;
}

Verdict heat_decay(Outcome& out) {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  const auto c = default_config("heat-decay");
  out = run_experiment(c, workdir("heat"));
  const double secs = seconds_since(t0);
  require_check(v, out, "self_similar_slope");
  require_check(v, out, "zero_moment_slope");
  v.require(secs < 120.0, fmt("runtime %.1fs < 120s", secs));
  return v;
}

Verdict good_unknown_structure() {
  Verdict v;
  auto self_similar = [](double z) { return z * std::exp(-z * z / 4.0); };
  auto zero_moment = [](double z) { return z * (3.0 - z * z) * std::exp(-0.5 * z * z); };
  auto run = [](int nz, double dt, double T, int cadence, const std::function<double(double)>& f) {
    const VerticalGrid g(40.0, nz, 0.0);
    HeatOptions o;
    o.dt = dt;
    o.t_final = T;
    o.cadence = cadence;
    return structural_residuals(g, solve_heat(g, sample_profile(g, f), o));
  };
  const auto a = run(401, 0.02, 2.0, 1, self_similar);
  const auto b = run(801, 0.01, 2.0, 1, self_similar);
  const double rt = a.damped_h_tilde / b.damped_h_tilde, rH = a.damped_H / b.damped_H;
  v.require(rt >= 3.5 && rH >= 3.5, fmt("residual ratios %.2f and %.2f >= 3.5", rt, rH));

  // Moment drift over the full decay horizon of the default heat run.
  const auto hc = default_config("heat-decay");
  const VerticalGrid g(hc.grid.z_max, hc.grid.nz, hc.grid.stretch);
  HeatOptions o;
  o.dt = hc.numerics.dt;
  o.t_final = hc.numerics.t_final;
  o.cadence = hc.numerics.cadence;
  const auto full = structural_residuals(g, solve_heat(g, sample_profile(g, self_similar), o));
  v.require(full.moment_drift <= 1e-8, fmt("moment drift %.3e <= 1e-8 up to t=%g", full.moment_drift, o.t_final));

  // Negative test: with nonzero moment (1+t) int h~ stays at sqrt(pi) for the self-similar data,
  // while zero-moment data leave only discretization error.
  double lo = INFINITY, lo_scaled = INFINITY, hi = 0.0;
  for (std::size_t i = 0; i < full.times.size(); ++i) {
    lo = std::min(lo, full.mean_h_tilde[i]);
    lo_scaled = std::min(lo_scaled, (1.0 + full.times[i]) * full.mean_h_tilde[i]);
  }
  const auto zm = run(801, 0.01, 10.0, 10, zero_moment);
  for (double m : zm.mean_h_tilde) hi = std::max(hi, m);
  const double root_pi = std::sqrt(kPi);
  v.require(std::abs(lo_scaled / root_pi - 1.0) <= 1e-2,
            fmt("min (1+t)|int h~| %.6f within 1%% of sqrt(pi) = %.6f", lo_scaled, root_pi));
  v.require(hi <= 1e-2 * lo, fmt("zero-moment max |int h~| %.3e <= 1e-2 x nonzero-moment min %.3e", hi, lo));
  return v;
}

Verdict poincare_saturation() {
  Verdict v;
  ProfileAuditParams p;
  p.lambda = 1.0;
  const VerticalGrid wide(40.0, 2001, 0.0);
  const auto g = audit_poincare(wide, {sample_profile(wide, [](double z) { return std::exp(-z * z / 4.0); })}, p);
  v.require(g.used == 1 && std::abs(g.worst_ratio - 1.0) <= 1e-4, fmt("gaussian ratio %.10f within 1e-4 of 1", g.worst_ratio));
  const VerticalGrid strip(20.0, 2001, 0.0);
  const auto r = audit_poincare(strip, random_profiles(strip, 100, 2024, true, false), p);
  v.require(r.used == 100, fmt("%g of 100 profiles admissible", double(r.used)));
  v.require(r.worst_ratio <= 1.0 + 1e-6, fmt("worst random ratio %.10f <= 1 + 1e-6", r.worst_ratio));
  return v;
}

Verdict analytic_monitor() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  auto c = default_config("sim3d-linear");
  c.threads = hardware_threads();
  const auto sheared = run_experiment(c, workdir("monitor"));
  require_check(v, sheared, "monitor_budget");
  c.physics.eps1 = 0.0;
  const auto plain = run_experiment(c, workdir("monitor_unsheared"));
  require_check(v, plain, "x_norm_strictly_decreasing");
  const double secs = seconds_since(t0);
  v.require(secs < 600.0, fmt("runtime %.1fs < 600s", secs));
  return v;
}

Verdict bessel_identity() {
  Verdict v;
  const double w = mode_weight(1.0, 1.0).x;
  const double oracle = std::cyl_bessel_i(0.0, 2.0);
  v.require(std::abs(w - oracle) <= 1e-12, fmt("weight %.16f vs I0(2) %.16f", w, oracle));
  return v;
}

Verdict inequality_scans() {
  Verdict v;
  auto c = default_config("verify-inequalities");
  c.threads = hardware_threads();
  const auto o = run_experiment(c, workdir("inequalities"));
  for (const auto& ch : o.checks) v.require(ch.pass, ch.name + " (" + ch.detail + ")");
  return v;
}

Verdict smoothing_ladder_check() {
  Verdict v;
  auto c = default_config("smoothing-ladder");
  c.threads = hardware_threads();
  const auto o = run_experiment(c, workdir("ladder"));
  for (const auto& ch : o.checks) v.require(ch.pass, ch.name + " (" + ch.detail + ")");
  return v;
}

// Small versions of every scenario, run at several thread counts.
Verdict determinism() {
  Verdict v;
  std::vector<ScenarioConfig> cases;
  {
    auto c = parse_config(R"({"grid": {"nx": 32, "nz": 65}, "numerics": {"t_final": 0.5, "dt": 0.005, "cadence": 5},
                              "initial": {"kind": "random"}})", "sim2d");
    cases.push_back(c);
    cases.push_back(parse_config(R"({"grid": {"nx": 8, "ny": 8, "nz": 65}, "numerics": {"t_final": 0.5}})",
                                 "sim3d-linear"));
    cases.push_back(parse_config(R"({"grid": {"nz": 401, "z_max": 100}, "numerics": {"t_final": 50, "dt": 0.05,
                                  "cadence": 10, "fit_start": 5, "fit_end": 50}})", "heat-decay"));
    cases.push_back(parse_config(R"({"audit": {"caps": [6, 9]}})", "verify-inequalities"));
    cases.push_back(parse_config(R"({"grid": {"nz": 801}, "audit": {"samples": 10}})", "lemma-audit"));
    cases.push_back(parse_config(R"({"grid": {"nx": 32, "nz": 65, "lx": 25.132741228718345},
                                  "numerics": {"t_final": 0.4, "dt": 0.005, "cadence": 2}})", "smoothing-ladder"));
  }
  for (auto c : cases) {
    c.seed = 77;
    std::vector<std::string> reference;
    bool same = true;
    for (int threads : {1, 2, 5}) {
      c.threads = threads;
      const auto dir = workdir("determinism_" + c.kind + "_" + std::to_string(threads));
      RunControl ctl;
      ctl.plots = false;
      const auto o = run_experiment(c, dir, ctl);
      std::vector<std::string> csv;
      for (const auto& f : o.files)
        if (f.size() > 4 && f.substr(f.size() - 4) == ".csv") csv.push_back(read_text(dir / f));
      if (reference.empty()) reference = csv;
      else same = same && csv == reference;
    }
    v.require(same && !reference.empty(), c.kind + " identical across 1, 2 and 5 threads");
  }
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  // Optional arguments select criteria by number.
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
  struct Item {
    int id;
    const char* name;
    std::function<Verdict()> run;
  };
  Outcome heat;
  const std::vector<Item> items = {
      {1, "dissipation identity on random compatible fields", dissipation_identity},
      {2, "2D energy budget and norm monotonicity", energy_monotonicity},
      {3, "heat decay exponents", [&] { return heat_decay(heat); }},
      {4, "good-unknown damped structure", good_unknown_structure},
      {5, "weighted Poincare saturation", poincare_saturation},
      {6, "3D analytic-norm monitor", analytic_monitor},
      {7, "series weight equals I0(2)", bessel_identity},
      {8, "combinatorial inequality scans stable across caps", inequality_scans},
      {9, "smoothing ladder and radius estimate", smoothing_ladder_check},
      {10, "bitwise determinism across thread counts", determinism},
  };
  int failed = 0, ran = 0;
  for (const auto& it : items) {
    if (!only.empty() && std::find(only.begin(), only.end(), it.id) == only.end()) continue;
    ++ran;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = it.run();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = std::string("error: ") + e.what();
    }
    if (!v.pass) ++failed;
    std::printf("%s criterion %d: %s [%.1fs] %s\n", v.pass ? "PASS" : "FAIL", it.id, it.name, seconds_since(t0),
                v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %d criteria passed\n", ran - failed, ran);
  return failed == 0 ? 0 : 1;
}
