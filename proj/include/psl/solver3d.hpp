#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "psl/common.hpp"
#include "psl/heat1d.hpp"
#include "psl/norms.hpp"
#include "psl/shercliff.hpp"
#include "psl/solver2d.hpp"
#include "psl/spectral_field.hpp"

namespace psl {

inline double rho_schedule(double t, double rho0) {
  if (!(t >= 0.0)) throw InvalidArgument("schedule time must be non-negative");
  if (!(rho0 > 0.0)) throw InvalidArgument("initial radius must be positive");
  return 0.5 * rho0 + 0.5 * rho0 / std::sqrt(1.0 + t);
}

// ---------------------------------------------------------------------------
// Shear

/// Heat-flow shear profiles sampled at every step of size dt.
struct ShearPair {
  double dt = 0.0;
  double eps1 = 0.0;
  std::vector<std::vector<double>> U, V;
  double moment_U = 0.0, moment_V = 0.0;  // measured before projection
  double decay_slope = std::nan("");      // fitted exponent of the decay quantity
  double c1 = 0.0;                        // max (1+t)^{3/2} * quantity / eps1

  std::size_t samples() const { return U.size(); }
};

namespace detail {

// Measures the moment of eps1 * shape; rejects it when it is not negligible
// and removes the residual quadrature moment otherwise.
inline std::vector<double> zero_moment_profile(const VerticalGrid& g, std::span<const double> shape, double eps1,
                                               const char* name, double& measured) {
  std::vector<double> h(shape.begin(), shape.end());
  for (auto& v : h) v *= eps1;
  const auto z = g.z();
  const auto w = g.energy_weights();
  measured = first_moment(g, h);
  double scale = 0.0;
  for (int i = 0; i < g.size(); ++i) scale += w[i] * z[i] * std::abs(h[i]);
  if (scale == 0.0) return h;
  if (std::abs(measured) > 1e-3 * scale) {
    std::ostringstream os;
    os << "shear profile " << name << " has nonzero moment " << measured;
    throw InvalidArgument(os.str());
  }
  std::vector<double> q(g.size());
  for (int i = 0; i < g.size(); ++i) q[i] = z[i] * std::exp(-0.5 * z[i] * z[i]);
  const double mq = first_moment(g, q);
  for (int i = 0; i < g.size(); ++i) h[i] -= measured / mq * q[i];
  return h;
}

}  // namespace detail

/// Runs the two heat flows from eps1 * shape_U and eps1 * shape_V up to T with step dt
/// (every step stored) and attaches the fitted decay certificate.
inline ShearPair make_shear(const VerticalGrid& g, std::span<const double> shape_u, std::span<const double> shape_v,
                            double eps1, double T, double dt) {
  if (!(eps1 >= 0.0)) throw InvalidArgument("shear amplitude must be non-negative");
  ShearPair s;
  s.dt = dt;
  s.eps1 = eps1;
  auto u0 = detail::zero_moment_profile(g, shape_u, eps1, "U", s.moment_U);
  auto v0 = detail::zero_moment_profile(g, shape_v, eps1, "V", s.moment_V);
  HeatOptions opt;
  opt.dt = dt;
  opt.t_final = T;
  opt.cadence = 1;
  for (auto* pair : {&s.U, &s.V}) {
    const auto seq = solve_heat(g, pair == &s.U ? u0 : v0, opt);
    pair->reserve(seq.size());
    for (const auto& st : seq) pair->push_back(st.h);
  }
  std::vector<double> t, q;
  for (std::size_t n = 0; n < s.samples(); ++n) {
    const double tn = double(n) * dt;
    const double val = decay_quantity(g, s.U[n]) + decay_quantity(g, s.V[n]);
    t.push_back(tn);
    q.push_back(val);
    if (eps1 > 0.0) s.c1 = std::max(s.c1, std::pow(1.0 + tn, 1.5) * val / eps1);
  }
  if (T >= 1.0 && eps1 > 0.0) {
    bool positive = true;
    for (std::size_t n = 0; n < t.size(); ++n)
      if (t[n] >= 0.1 * T && !(q[n] > 0.0)) positive = false;
    if (positive) s.decay_slope = fit_decay(t, q, 0.1 * T, T);
  }
  return s;
}

inline std::vector<double> zero_moment_shape(const VerticalGrid& g) {
  return sample_profile(g, [](double z) { return z * (3.0 - z * z) * std::exp(-0.5 * z * z); });
}

// ---------------------------------------------------------------------------
// Analytic norms

struct ModeWeights {
  double x = 0.0;  // sum_m L_{rho,m}^2 k^{2m}
  double y = 0.0;  // sum_m (m+1)/rho L_{rho,m}^2 k^{2m}
};

/// Direct series summation with a 1e-16 relative cutoff once terms decrease.
inline ModeWeights mode_weight(double rho, double k) {
  if (!(rho > 0.0)) throw InvalidArgument("radius must be positive");
  ModeWeights w;
  const double kk = k * k;
  double term = rho * rho;  // L_{rho,0}^2
  for (int m = 0;; ++m) {
    w.x += term;
    w.y += (m + 1) / rho * term;
    if (!std::isfinite(w.x) || w.x > 1e280) {
      std::ostringstream os;
      os << "analytic weight overflow at rho=" << rho << " k=" << k;
      throw NumericalError(os.str());
    }
    const double next = term * rho * rho * kk / double((m + 1) * (m + 1));
    if (next == 0.0) break;
    if (next <= term && next < 1e-16 * w.x && (m + 2) / rho * next < 1e-16 * w.y) break;
    term = next;
  }
  return w;
}

struct AnalyticNorms {
  double x2 = 0.0, y2 = 0.0, z2 = 0.0;
};

/// Squared X, Y, Z norms of the pair (u, v) at radius rho.
inline AnalyticNorms analytic_norms(const SpectralField& u, const SpectralField& v, double rho) {
  u.check_same(v);
  const auto& g = u.grid();
  const auto& vg = g.vertical();
  const auto q = vg.quad_weights();
  std::vector<cplx> d1(u.nz()), d2(u.nz());
  AnalyticNorms n;
  for (int m = 0; m < u.modes(); ++m) {
    const auto w = mode_weight(rho, g.ky(m));
    const double kx2 = g.kx(m) * g.kx(m);
    double s0 = 0, s1 = 0, s2 = 0;
    for (const SpectralField* a : {&u, &v}) {
      vg.d1<cplx>(a->mode(m), d1);
      vg.d2<cplx>(a->mode(m), d2);
      for (int i = 0; i < u.nz(); ++i) {
        s0 += q[i] * std::norm((*a)(m, i));
        s1 += q[i] * std::norm(d1[i]);
        s2 += q[i] * std::norm(d2[i]);
      }
    }
    const double pw = g.parseval_weight(m);
    n.x2 += pw * w.x * (s0 + s1);
    n.y2 += pw * w.y * (s0 + s1);
    n.z2 += pw * w.x * (s1 + s2 + kx2 * s0);
  }
  return n;
}

// ---------------------------------------------------------------------------
// Stepper

struct State3D {
  double t = 0.0;
  SpectralField u, v;
  SpectralField u_prev, v_prev;
  double dt = 1e-3;
  std::int64_t step_index = 0;
};

struct Step3DOptions {
  bool diffusion_and_shercliff = true;
  bool shear_advection = true;
  bool w_coupling = true;
  int threads = 1;
};

/// Per-(kx, ky) IMEX step: implicit diffusion and Shercliff blocks for u and v
/// (both with kx), explicit shear advection and w d_z(U, V) coupling.
class Stepper3D {
 public:
  Stepper3D(GridPtr grid, const ShearPair* shear, Step3DOptions opts)
      : grid_(std::move(grid)), shear_(shear), opts_(opts), blocks_(grid_) {
    if (!grid_->is_3d()) throw InvalidArgument("3D stepper needs a grid with a second tangential direction");
  }

  /// Explicit terms for both components at step index n (shear sampled there).
  void explicit_terms(const SpectralField& u, const SpectralField& v, std::int64_t n, SpectralField& eu,
                      SpectralField& ev) const {
    eu = SpectralField(grid_);
    ev = SpectralField(grid_);
    if (!shear_) return;
    if (std::size_t(n) >= shear_->samples()) throw InvalidArgument("shear horizon shorter than the run");
    const auto& g = *grid_;
    const auto& vg = g.vertical();
    const auto& U = shear_->U[n];
    const auto& V = shear_->V[n];
    std::vector<double> dU(g.nz()), dV(g.nz());
    vg.d1<double>(U, dU);
    vg.d1<double>(V, dV);
    const SpectralField w = opts_.w_coupling ? compute_w(u, v, opts_.threads) : SpectralField(grid_);
    parallel_for(std::size_t(u.modes()), opts_.threads, [&](std::size_t mi) {
      const int m = int(mi);
      const double kx = g.kx(m), ky = g.ky(m);
      for (int i = 0; i < g.nz(); ++i) {
        const cplx adv(0.0, kx * U[i] + ky * V[i]);
        cplx a = opts_.shear_advection ? adv * u(m, i) : cplx{};
        cplx b = opts_.shear_advection ? adv * v(m, i) : cplx{};
        if (opts_.w_coupling) {
          a += w(m, i) * dU[i];
          b += w(m, i) * dV[i];
        }
        eu(m, i) = a;
        ev(m, i) = b;
      }
    });
  }

  void step(State3D& s) {
    const double dt = s.dt;
    if (!(dt > 0.0)) throw InvalidArgument("time step must be positive");
    const bool bdf2 = !s.u_prev.empty();
    const double gdt = (bdf2 ? 1.5 : 1.0) / dt;
    SpectralField eu, ev;
    explicit_terms(s.u, s.v, s.step_index, eu, ev);
    if (bdf2 && !has_prev_) {
      explicit_terms(s.u_prev, s.v_prev, s.step_index - 1, eu_prev_, ev_prev_);
      has_prev_ = true;
    }
    SpectralField ru(grid_), rv(grid_);
    for (std::size_t i = 0; i < ru.data().size(); ++i) {
      if (bdf2) {
        ru.data()[i] = (2.0 * s.u.data()[i] - 0.5 * s.u_prev.data()[i]) / dt - (2.0 * eu.data()[i] - eu_prev_.data()[i]);
        rv.data()[i] = (2.0 * s.v.data()[i] - 0.5 * s.v_prev.data()[i]) / dt - (2.0 * ev.data()[i] - ev_prev_.data()[i]);
      } else {
        ru.data()[i] = s.u.data()[i] / dt - eu.data()[i];
        rv.data()[i] = s.v.data()[i] / dt - ev.data()[i];
      }
    }
    SpectralField nu(grid_), nv(grid_);
    const int nz = grid_->nz();
    if (opts_.diffusion_and_shercliff) {
      const auto& lu = blocks_.blocks(gdt);
      parallel_for(std::size_t(nu.modes()), opts_.threads, [&](std::size_t mi) {
        const int m = int(mi);
        if (grid_->is_nyquist(m)) return;
        std::vector<cplx> b(2 * nz);
        for (auto [rhs, out] : {std::pair{&ru, &nu}, std::pair{&rv, &nv}}) {
          std::fill(b.begin(), b.end(), cplx{});
          for (int i = 1; i + 1 < nz; ++i) b[2 * i] = (*rhs)(m, i);
          lu[m]->solve(std::span<cplx>(b));
          for (int i = 0; i < nz; ++i) (*out)(m, i) = b[2 * i];
        }
      });
    } else {
      for (std::size_t i = 0; i < nu.data().size(); ++i) {
        nu.data()[i] = ru.data()[i] / gdt;
        nv.data()[i] = rv.data()[i] / gdt;
      }
    }
    for (auto* f : {&nu, &nv}) {
      f->zero_walls();
      f->enforce_symmetry();
      if (!f->all_finite())
        throw NumericalError("step rejected at t=" + std::to_string(double(s.step_index + 1) * dt) +
                             ": non-finite field");
    }
    s.u_prev = std::move(s.u);
    s.v_prev = std::move(s.v);
    s.u = std::move(nu);
    s.v = std::move(nv);
    eu_prev_ = std::move(eu);
    ev_prev_ = std::move(ev);
    has_prev_ = true;
    s.step_index += 1;
    s.t = double(s.step_index) * dt;
  }

 private:
  GridPtr grid_;
  const ShearPair* shear_;
  Step3DOptions opts_;
  BlockCache blocks_;
  SpectralField eu_prev_, ev_prev_;
  bool has_prev_ = false;
};

// ---------------------------------------------------------------------------
// Scenario

struct Initial3DSpec {
  double amplitude = 1e-2;
  int ky_band = 4;  // highest |ky| index excited
  std::uint64_t seed = 0;
};

/// Band-limited analytic data: for kx index 0 and 1 and |ky| <= band,
/// coefficients amplitude * e^{-2 rho0 |ky|} with seeded phases, profile z e^{-z^2/2}.
inline void make_initial_3d(const Initial3DSpec& spec, double rho0, const GridPtr& grid, SpectralField& u,
                            SpectralField& v) {
  const auto& g = *grid;
  u = SpectralField(grid);
  v = SpectralField(grid);
  if (spec.amplitude == 0.0) return;
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
  const auto z = g.vertical().z();
  const int band = std::min(spec.ky_band, g.ky_count() / 2 - 1);
  for (int ix = 0; ix <= std::min(1, g.kx_count() - 2); ++ix)
    for (int iy = 0; iy < g.ky_count(); ++iy) {
      const int m = ix * g.ky_count() + iy;
      const int ks = g.ky_signed(iy);
      if (std::abs(ks) > band || g.is_nyquist(m)) continue;
      const double mag = spec.amplitude * std::exp(-2.0 * rho0 * std::abs(g.ky(m)));
      const cplx cu = std::polar(mag, phase(rng));
      const cplx cv = std::polar(0.5 * mag, phase(rng));
      for (int i = 0; i < g.nz(); ++i) {
        u(m, i) = cu * base_profile(z[i]);
        v(m, i) = cv * base_profile(z[i]);
      }
    }
  u.zero_walls();
  v.zero_walls();
  u.enforce_symmetry();
  v.enforce_symmetry();
}

struct Scenario3D {
  GridConfig grid{2.0 * kPi, 16, 20.0, 129, 0.0, 2.0 * kPi, 16};
  Initial3DSpec initial;
  double eps1 = 1e-3;
  double rho0 = 0.5;
  double t_final = 20.0;
  double dt = 5e-3;
  int cadence = 20;
  int threads = 1;
};

inline const std::vector<std::string>& series3d_columns() {
  static const std::vector<std::string> cols = {"t", "rho", "x_norm", "y_norm", "z_norm", "cum_z", "monitor", "budget"};
  return cols;
}

struct Run3DResult {
  NormReport report{series3d_columns()};
  bool monitor_pass = true;
  double worst_margin = 0.0;  // min over samples of budget (1 + tol) - monitor
  ShearPair shear;
  State3D final_state;
};

/// Runs the linearized system and audits X^2_{rho(t)} + sum Z^2 dt <= X^2_{rho0}(0) (1 + tol).
inline Run3DResult run_scenario3d(const Scenario3D& sc, double rel_tol = 1e-5) {
  if (!(sc.dt > 0.0) || !(sc.t_final >= 0.0)) throw InvalidArgument("invalid time parameters");
  if (sc.cadence < 1) throw InvalidArgument("output cadence must be at least 1");
  auto grid = make_grid(sc.grid);
  if (!grid->is_3d()) throw InvalidArgument("3D scenario needs a positive second mode count");
  Run3DResult res;
  const auto shape = zero_moment_shape(grid->vertical());
  std::vector<double> shape_v(shape);
  for (auto& x : shape_v) x *= 0.5;
  res.shear = make_shear(grid->vertical(), shape, shape_v, sc.eps1, sc.t_final, sc.dt);
  Stepper3D stepper(grid, &res.shear, Step3DOptions{true, true, true, sc.threads});
  State3D& s = res.final_state;
  s.dt = sc.dt;
  make_initial_3d(sc.initial, sc.rho0, grid, s.u, s.v);
  const double budget = analytic_norms(s.u, s.v, sc.rho0).x2;
  double cum = 0.0;
  res.worst_margin = std::numeric_limits<double>::infinity();
  auto sample = [&] {
    const double rho = rho_schedule(s.t, sc.rho0);
    const auto n = analytic_norms(s.u, s.v, rho);
    const double mon = n.x2 + cum;
    const double margin = budget * (1.0 + rel_tol) - mon;
    res.worst_margin = std::min(res.worst_margin, margin);
    if (margin < 0.0) res.monitor_pass = false;
    res.report.append({s.t, rho, std::sqrt(n.x2), std::sqrt(n.y2), std::sqrt(n.z2), cum, mon, budget});
  };
  sample();
  const std::int64_t total = step_count(sc.t_final, sc.dt);
  while (s.step_index < total) {
    const double z2 = analytic_norms(s.u, s.v, rho_schedule(s.t, sc.rho0)).z2;
    stepper.step(s);
    cum += z2 * s.dt;
    if (s.step_index % sc.cadence == 0 || s.step_index == total) sample();
  }
  return res;
}

}  // namespace psl
