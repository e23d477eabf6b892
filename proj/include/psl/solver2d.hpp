#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "psl/banded.hpp"
#include "psl/common.hpp"
#include "psl/norms.hpp"
#include "psl/shercliff.hpp"
#include "psl/spectral_field.hpp"

namespace psl {

// ---------------------------------------------------------------------------
// Initial data

struct InitialSpec {
  std::string kind = "single_mode";  // "single_mode" | "random" | "zero"
  double amplitude = 0.01;
  std::string normalization = "coefficient";  // "coefficient" | "h1_norm"
  int mode = 1;
  int modes = 8;          // random: highest excited index
  double decay = 0.5;     // random: spectral decay rate e^{-decay*k}
  std::uint64_t seed = 0;
};

/// Vertical profile z exp(-z^2/2): vanishes at the wall, negligible at Z_max.
inline double base_profile(double z) { return z * std::exp(-0.5 * z * z); }

/// Builds u0. single_mode gives amplitude * sin(k x) z e^{-z^2/2}; random
/// combines modes 1..modes with seeded phases and e^{-decay k} magnitudes.
/// With normalization "h1_norm" the field is rescaled so its weighted norm equals amplitude.
inline SpectralField make_initial_data(const InitialSpec& spec, const GridPtr& grid) {
  if (!std::isfinite(spec.amplitude) || spec.amplitude < 0.0)
    throw InvalidArgument("initial amplitude must be finite and non-negative");
  SpectralField u(grid);
  if (spec.amplitude == 0.0 || spec.kind == "zero") return u;
  const auto& g = *grid;
  const auto z = g.vertical().z();
  const int kmax = g.dealias_kx_max();
  if (spec.kind == "single_mode") {
    if (spec.mode < 1 || spec.mode > kmax) throw InvalidArgument("initial mode outside the resolved range");
    const int m = spec.mode * g.ky_count();
    // sin(kx) = (e^{ikx} - e^{-ikx}) / 2i: stored amplitude -i/2.
    for (int i = 0; i < g.nz(); ++i) u(m, i) = cplx(0.0, -0.5) * base_profile(z[i]);
  } else if (spec.kind == "random") {
    if (spec.modes < 1) throw InvalidArgument("random initial data needs at least one mode");
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
    const int top = std::min(spec.modes, kmax);
    for (int k = 1; k <= top; ++k) {
      const double p = phase(rng);
      const cplx c = 0.5 * std::exp(-spec.decay * k) * std::polar(1.0, p);
      const int m = k * g.ky_count();
      for (int i = 0; i < g.nz(); ++i) u(m, i) = c * base_profile(z[i]);
    }
  } else {
    throw InvalidArgument("unknown initial data kind: " + spec.kind);
  }
  u.zero_walls();
  if (spec.normalization == "h1_norm") {
    const double n = h1_weighted_norm(u);
    u *= spec.amplitude / n;
  } else if (spec.normalization == "coefficient") {
    u *= spec.amplitude;
  } else {
    throw InvalidArgument("unknown normalization: " + spec.normalization);
  }
  return u;
}

/// amplitude * sin(k x) * profile(z) for a caller-supplied profile; the
/// profile must vanish at the wall.
inline SpectralField make_initial_from_profile(const GridPtr& grid, int k, double amplitude,
                                               const std::function<double(double)>& profile) {
  const double p0 = profile(0.0);
  if (p0 != 0.0) throw InvalidArgument("initial profile violates u(x,0) = 0");
  if (k < 1 || k > grid->dealias_kx_max()) throw InvalidArgument("initial mode outside the resolved range");
  SpectralField u(grid);
  const auto z = grid->vertical().z();
  const int m = k * grid->ky_count();
  for (int i = 0; i < grid->nz(); ++i) u(m, i) = cplx(0.0, -0.5) * amplitude * profile(z[i]);
  u.zero_walls();
  return u;
}

// ---------------------------------------------------------------------------
// Advection

/// Zeroes every kx index above the 2/3-rule limit.
inline void dealias(SpectralField& f) {
  const auto& g = f.grid();
  const int kmax = g.dealias_kx_max();
  for (int m = 0; m < f.modes(); ++m)
    if (g.kx_index(m) > kmax)
      for (auto& v : f.mode(m)) v = 0.0;
}

/// Pseudo-spectral evaluation of u d_x u + w d_z u (2/3 rule, five-point d_z).
class Advection {
 public:
  explicit Advection(const GridPtr& grid) : grid_(grid), fft_(*grid) {}

  SpectralField operator()(const SpectralField& u, const SpectralField& w) {
    u.check_same(w);
    const auto& g = *grid_;
    const auto& vg = g.vertical();
    SpectralField ud = u, wd = w;
    dealias(ud);
    dealias(wd);
    SpectralField ux = dx(ud);
    SpectralField uz(grid_);
    for (int m = 0; m < ud.modes(); ++m) vg.d1<cplx>(ud.mode(m), uz.mode(m));
    const std::size_t n = std::size_t(g.nx()) * g.nz();
    pu_.resize(n);
    pux_.resize(n);
    pw_.resize(n);
    puz_.resize(n);
    fft_.to_physical(ud, pu_);
    fft_.to_physical(ux, pux_);
    fft_.to_physical(wd, pw_);
    fft_.to_physical(uz, puz_);
    for (std::size_t i = 0; i < n; ++i) pu_[i] = pu_[i] * pux_[i] + pw_[i] * puz_[i];
    SpectralField out(grid_);
    fft_.to_spectral(pu_, out);
    dealias(out);
    out.enforce_symmetry();
    for (int m = 0; m < out.modes(); ++m) out(m, 0) = 0.0;
    return out;
  }

  SpectralField operator()(const SpectralField& u) { return (*this)(u, compute_w(u)); }

 private:
  GridPtr grid_;
  TangentialTransform fft_;
  std::vector<double> pu_, pux_, pw_, puz_;
};

// ---------------------------------------------------------------------------
// Implicit per-mode block

/// Interleaved (u_i, f_i) system for one tangential mode:
///   (gamma/dt) u - d_z^2 u - i k f = rhs,   d_z^2 f + i k u = 0,
/// Dirichlet rows at both ends. Bandwidth two on each side.
inline BandedLU<cplx> shercliff_block(const VerticalGrid& vg, double k, double gamma_over_dt) {
  const int nz = vg.size();
  const int n = 2 * nz;
  BandedLU<cplx> a(n, 2, 2);
  const cplx ik(0.0, k);
  for (int i = 0; i < nz; ++i) {
    const int ru = 2 * i, rf = 2 * i + 1;
    if (i == 0 || i == nz - 1) {
      a.set(ru, ru, 1.0);
      a.set(rf, rf, 1.0);
      continue;
    }
    a.set(ru, ru - 2, -vg.lower(i));
    a.set(ru, ru, gamma_over_dt - vg.diag(i));
    a.set(ru, ru + 2, -vg.upper(i));
    a.set(ru, rf, -ik);
    a.set(rf, rf - 2, vg.lower(i));
    a.set(rf, rf, vg.diag(i));
    a.set(rf, rf + 2, vg.upper(i));
    a.set(rf, ru, ik);
  }
  a.factor();
  return a;
}

/// Cache of factorized blocks keyed by (mode, gamma/dt).
class BlockCache {
 public:
  BlockCache(GridPtr grid) : grid_(std::move(grid)) {}

  /// Factorizations for every mode at one coefficient, built on first use.
  const std::vector<std::unique_ptr<BandedLU<cplx>>>& blocks(double gamma_over_dt) {
    auto& slot = cache_[gamma_over_dt];
    if (slot.empty()) {
      const auto& g = *grid_;
      slot.resize(g.mode_count());
      for (int m = 0; m < g.mode_count(); ++m)
        slot[m] = std::make_unique<BandedLU<cplx>>(shercliff_block(g.vertical(), g.kx(m), gamma_over_dt));
    }
    return slot;
  }

 private:
  GridPtr grid_;
  std::map<double, std::vector<std::unique_ptr<BandedLU<cplx>>>> cache_;
};

/// -d_z^2 u - d_x f(u), the implicit linear operator, with three-point stencils.
inline SpectralField apply_linear_operator(const SpectralField& u) {
  const auto f = solve_magnetic(u);
  const auto& vg = u.grid().vertical();
  SpectralField out(u.grid_ptr());
  std::vector<cplx> tmp(u.nz());
  for (int m = 0; m < u.modes(); ++m) {
    vg.d2_3pt<cplx>(u.mode(m), tmp);
    const cplx ik(0.0, u.grid().kx(m));
    for (int i = 1; i + 1 < u.nz(); ++i) out(m, i) = -tmp[i] - ik * f(m, i);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Stepper

struct State2D {
  double t = 0.0;
  SpectralField u;
  SpectralField u_prev;  // previous level; empty before the first step
  double dt = 1e-3;
  std::int64_t step_index = 0;
};

struct StepOptions {
  bool advection = true;
  int threads = 1;
  /// Optional forcing evaluated at the new time level.
  std::function<SpectralField(double)> forcing;
};

/// IMEX stepper: implicit diffusion + Shercliff block, explicit advection.
/// First step backward Euler, then two-level BDF2 with extrapolated advection.
class Stepper2D {
 public:
  Stepper2D(GridPtr grid, StepOptions opts) : grid_(std::move(grid)), opts_(std::move(opts)), blocks_(grid_) {
    if (opts_.advection) advect_ = std::make_unique<Advection>(grid_);
  }

  const StepOptions& options() const { return opts_; }

  SpectralField nonlinear(const SpectralField& u) {
    if (!advect_) return SpectralField(u.grid_ptr());
    return (*advect_)(u, compute_w(u, opts_.threads));
  }

  /// Advances by one step of size `state.dt`. Throws NumericalError and leaves
  /// the state untouched when the new field is not finite.
  void step(State2D& s) {
    if (!s.u.grid().same_as(*grid_)) throw InvalidArgument("grid mismatch between state and stepper");
    const double dt = s.dt;
    if (!(dt > 0.0)) throw InvalidArgument("time step must be positive");
    const bool bdf2 = !s.u_prev.empty();
    const double t_new = double(s.step_index + 1) * dt;
    const double gdt = (bdf2 ? 1.5 : 1.0) / dt;

    const SpectralField n_cur = nonlinear(s.u);
    SpectralField rhs(grid_);
    if (bdf2) {
      if (!has_cached_prev_) {
        n_prev_ = nonlinear(s.u_prev);
        has_cached_prev_ = true;
      }
      for (std::size_t i = 0; i < rhs.data().size(); ++i)
        rhs.data()[i] = (2.0 * s.u.data()[i] - 0.5 * s.u_prev.data()[i]) / dt -
                        (2.0 * n_cur.data()[i] - n_prev_.data()[i]);
    } else {
      for (std::size_t i = 0; i < rhs.data().size(); ++i) rhs.data()[i] = s.u.data()[i] / dt - n_cur.data()[i];
    }
    if (opts_.forcing) rhs += opts_.forcing(t_new);

    const auto& lu = blocks_.blocks(gdt);
    SpectralField next(grid_);
    const int nz = grid_->nz();
    parallel_for(std::size_t(next.modes()), opts_.threads, [&](std::size_t mi) {
      const int m = int(mi);
      if (grid_->is_nyquist(m)) return;
      std::vector<cplx> b(2 * nz, cplx{});
      for (int i = 1; i + 1 < nz; ++i) b[2 * i] = rhs(m, i);
      lu[m]->solve(std::span<cplx>(b));
      for (int i = 0; i < nz; ++i) next(m, i) = b[2 * i];
    });
    next.zero_walls();
    next.enforce_symmetry();
    if (!next.all_finite())
      throw NumericalError("step rejected at t=" + std::to_string(t_new) + ": non-finite field");

    s.u_prev = std::move(s.u);
    s.u = std::move(next);
    n_prev_ = n_cur;
    has_cached_prev_ = true;
    s.t = t_new;
    s.step_index += 1;
  }

  /// Drops cached history (call after replacing the state externally).
  void reset_history() { has_cached_prev_ = false; }

 private:
  GridPtr grid_;
  StepOptions opts_;
  BlockCache blocks_;
  std::unique_ptr<Advection> advect_;
  SpectralField n_prev_;
  bool has_cached_prev_ = false;
};

// ---------------------------------------------------------------------------
// Diagnostics

struct CompatibilityDiagnostics {
  double d2u_wall = 0.0;    // max over x of |d_z^2 u(x, 0)|
  double far_moment = 0.0;  // max over k != 0 of |int z u_k| / ||u_k||
};

inline CompatibilityDiagnostics compatibility_diagnostics(const SpectralField& u) {
  CompatibilityDiagnostics d;
  const auto& g = u.grid();
  const auto& vg = g.vertical();
  const auto q = vg.quad_weights();
  const auto z = vg.z();
  std::vector<cplx> wall(u.modes());
  std::vector<cplx> tmp(u.nz());
  for (int m = 0; m < u.modes(); ++m) {
    vg.d2<cplx>(u.mode(m), tmp);
    wall[m] = tmp[0];
    if (g.kx_index(m) == 0 && g.ky_index(m) == 0) continue;
    cplx mom{};
    double nrm = 0.0;
    for (int i = 0; i < u.nz(); ++i) {
      mom += q[i] * z[i] * u(m, i);
      nrm += q[i] * std::norm(u(m, i));
    }
    if (nrm > 0.0) d.far_moment = std::max(d.far_moment, std::abs(mom) / std::sqrt(nrm));
  }
  if (!g.is_3d()) {
    for (int ix = 0; ix < g.nx(); ++ix) {
      const double x = x_node(g, ix);
      double v = 0.0;
      for (int m = 0; m < u.modes(); ++m) {
        const double c = g.kx_index(m) == 0 ? 1.0 : 2.0;
        v += c * std::real(wall[m] * std::polar(1.0, g.kx(m) * x));
      }
      d.d2u_wall = std::max(d.d2u_wall, std::abs(v));
    }
  }
  return d;
}

// ---------------------------------------------------------------------------
// Scenario driver

struct Scenario2D {
  GridConfig grid;
  InitialSpec initial;
  double t_final = 1.0;
  double dt = 1e-3;
  int cadence = 100;  // steps between samples
  bool advection = true;
  double radius_floor = 1e-14;
  int threads = 1;
};

struct Run2DResult {
  NormReport report{series2d_columns()};
  State2D final_state;
  double cum_dissipation = 0.0;
};

/// Hooks called during a run: after each sample (with the state) and for
/// checkpoints. Both are optional.
struct RunHooks {
  std::function<void(const State2D&, double cum_dissipation)> on_sample;
  std::function<SpectralField(double)> forcing;
};

inline std::vector<double> sample_row(const State2D& s, double cum, double radius_floor) {
  const auto diag = compatibility_diagnostics(s.u);
  const auto rf = tangential_radius_fit(s.u, radius_floor);
  return {s.t,
          h1_weighted_norm(s.u),
          dissipation_functional(s.u),
          cum,
          dissipation_residual(s.u),
          diag.d2u_wall,
          diag.far_moment,
          rf.determinate ? rf.radius : std::nan(""),
          top_mass_fraction(s.u)};
}

/// Number of steps needed to reach t_final (rounded to the nearest step).
inline std::int64_t step_count(double t_final, double dt) {
  return std::int64_t(std::llround(t_final / dt));
}

/// Runs (or continues) a scenario. The cumulative dissipation is a left
/// Riemann sum over solver steps. When `resume` is given the run continues
/// from it and emits only the rows produced after the resume point.
inline Run2DResult run_scenario2d(const Scenario2D& sc, const RunHooks& hooks = {},
                                  const State2D* resume = nullptr, double resume_cum = 0.0) {
  if (!(sc.t_final >= 0.0)) throw InvalidArgument("final time must be non-negative");
  if (!(sc.dt > 0.0)) throw InvalidArgument("time step must be positive");
  if (sc.cadence < 1) throw InvalidArgument("output cadence must be at least 1");
  auto grid = make_grid(sc.grid);
  StepOptions opts;
  opts.advection = sc.advection;
  opts.threads = sc.threads;
  opts.forcing = hooks.forcing;
  Stepper2D stepper(grid, opts);
  Run2DResult res;
  State2D& s = res.final_state;
  double cum = 0.0;
  if (resume) {
    s = *resume;
    if (!s.u.grid().same_as(*grid)) throw InvalidArgument("checkpoint grid does not match the scenario grid");
    s.u = SpectralField(grid);
    s.u.data() = resume->u.data();
    if (!resume->u_prev.empty()) {
      s.u_prev = SpectralField(grid);
      s.u_prev.data() = resume->u_prev.data();
    }
    if (s.dt != sc.dt) throw InvalidArgument("checkpoint time step does not match the scenario");
    cum = resume_cum;
  } else {
    s.u = make_initial_data(sc.initial, grid);
    s.dt = sc.dt;
    res.report.append(sample_row(s, cum, sc.radius_floor));
    if (hooks.on_sample) hooks.on_sample(s, cum);
  }
  const std::int64_t total = step_count(sc.t_final, sc.dt);
  while (s.step_index < total) {
    const double d = dissipation_functional(s.u);
    stepper.step(s);
    cum += d * s.dt;
    if (s.step_index % sc.cadence == 0 || s.step_index == total) {
      res.report.append(sample_row(s, cum, sc.radius_floor));
      if (hooks.on_sample) hooks.on_sample(s, cum);
    }
  }
  res.cum_dissipation = cum;
  return res;
}

}  // namespace psl
