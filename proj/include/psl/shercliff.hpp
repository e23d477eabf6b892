#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "psl/banded.hpp"
#include "psl/common.hpp"
#include "psl/spectral_field.hpp"

namespace psl {

/// Factorized three-point Dirichlet Laplacian on the vertical grid.
/// Boundary rows are identities, so solutions vanish at both ends.
inline BandedLU<double> dirichlet_laplacian(const VerticalGrid& g) {
  const int n = g.size();
  BandedLU<double> lu(n, 1, 1);
  lu.set(0, 0, 1.0);
  lu.set(n - 1, n - 1, 1.0);
  for (int i = 1; i + 1 < n; ++i) {
    lu.set(i, i - 1, g.lower(i));
    lu.set(i, i, g.diag(i));
    lu.set(i, i + 1, g.upper(i));
  }
  lu.factor();
  return lu;
}

/// Vertical velocity from incompressibility: w = -int_0^z (d_x u + d_y v).
/// Pass an empty `v` for 2D fields.
inline SpectralField compute_w(const SpectralField& u, const SpectralField& v, int threads = 1) {
  const bool has_v = !v.empty();
  if (has_v) u.check_same(v);
  SpectralField w(u.grid_ptr());
  const auto& g = u.grid();
  const auto& vg = g.vertical();
  parallel_for(std::size_t(u.modes()), threads, [&](std::size_t mi) {
    const int m = int(mi);
    const int nz = g.nz();
    std::vector<cplx> div(nz);
    const cplx ikx(0.0, g.kx(m)), iky(0.0, g.ky(m));
    for (int i = 0; i < nz; ++i) div[i] = ikx * u(m, i) + (has_v ? iky * v(m, i) : cplx{});
    auto out = w.mode(m);
    vg.cumulative_trapezoid<cplx>(div, out);
    for (auto& x : out) x = -x;
  });
  return w;
}

inline SpectralField compute_w(const SpectralField& u, int threads = 1) {
  return compute_w(u, SpectralField{}, threads);
}

/// Shercliff closure: per mode, d_z^2 f_k = -i kx u_k with f_k = 0 at z = 0 and z = Z_max.
/// In 3D the same relation with kx yields g from v.
inline SpectralField solve_magnetic(const SpectralField& u, int threads = 1) {
  const auto& g = u.grid();
  const auto lap = dirichlet_laplacian(g.vertical());
  SpectralField f(u.grid_ptr());
  parallel_for(std::size_t(u.modes()), threads, [&](std::size_t mi) {
    const int m = int(mi);
    const int nz = g.nz();
    auto out = f.mode(m);
    const double k = g.kx(m);
    if (k == 0.0) return;
    const cplx ik(0.0, k);
    out[0] = 0.0;
    out[nz - 1] = 0.0;
    std::vector<cplx> rhs(nz);
    for (int i = 1; i + 1 < nz; ++i) rhs[i] = -ik * u(m, i);
    std::copy(rhs.begin(), rhs.end(), out.begin());
    lap.solve(out);
    // One refinement sweep keeps the summation-by-parts identity at roundoff on fine grids.
    const auto& vg = g.vertical();
    std::vector<cplx> r(nz);
    for (int i = 1; i + 1 < nz; ++i)
      r[i] = rhs[i] - (vg.lower(i) * out[i - 1] + vg.diag(i) * out[i] + vg.upper(i) * out[i + 1]);
    lap.solve(std::span<cplx>(r));
    for (int i = 1; i + 1 < nz; ++i) out[i] += r[i];
  });
  return f;
}

/// L2 inner product of two real fields with the energy quadrature (the
/// quadrature under which the three-point Laplacian is self-adjoint).
inline double energy_inner(const SpectralField& a, const SpectralField& b) {
  a.check_same(b);
  const auto& g = a.grid();
  const auto ew = g.vertical().energy_weights();
  double total = 0.0;
  for (int m = 0; m < a.modes(); ++m) {
    double acc = 0.0;
    for (int i = 0; i < a.nz(); ++i) acc += ew[i] * std::real(std::conj(a(m, i)) * b(m, i));
    total += g.parseval_weight(m) * acc;
  }
  return total;
}

/// ||d_z f||^2 with d_z taken on cell edges (the adjoint of the three-point Laplacian).
inline double edge_gradient_norm2(const SpectralField& f) {
  const auto& g = f.grid();
  const auto h = g.vertical().spacing();
  double total = 0.0;
  for (int m = 0; m < f.modes(); ++m) {
    double acc = 0.0;
    for (int i = 0; i + 1 < f.nz(); ++i) acc += std::norm(f(m, i + 1) - f(m, i)) / h[i];
    total += g.parseval_weight(m) * acc;
  }
  return total;
}

/// d_x of a field, applied spectrally.
inline SpectralField dx(const SpectralField& a) {
  SpectralField out(a.grid_ptr());
  const auto& g = a.grid();
  for (int m = 0; m < a.modes(); ++m) {
    const cplx ik(0.0, g.kx(m));
    for (int i = 0; i < a.nz(); ++i) out(m, i) = ik * a(m, i);
  }
  return out;
}

/// Relative defect of the identity (d_x f, u) = -||d_z f||^2 with f from solve_magnetic.
inline double dissipation_residual(const SpectralField& u, int threads = 1) {
  const auto f = solve_magnetic(u, threads);
  const double lhs = energy_inner(dx(f), u);
  const double grad = edge_gradient_norm2(f);
  const double num = std::abs(lhs + grad);
  if (num == 0.0) return 0.0;
  return num / std::max(grad, std::numeric_limits<double>::min());
}

}  // namespace psl
