#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "psl/common.hpp"
#include "psl/spectral_field.hpp"

namespace psl {

/// Time series of monitored functionals. Column 0 is always "t".
struct NormReport {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  NormReport() = default;
  explicit NormReport(std::vector<std::string> cols) : columns(std::move(cols)) {
    if (columns.empty() || columns.front() != "t")
      throw InvalidArgument("report columns must start with t");
  }

  std::size_t size() const { return rows.size(); }
  bool empty() const { return rows.empty(); }

  int column(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return int(i);
    throw InvalidArgument("unknown report column: " + name);
  }

  std::vector<double> series(const std::string& name) const {
    const int c = column(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r[c]);
    return out;
  }

  void append(std::vector<double> row) {
    if (row.size() != columns.size()) throw InvalidArgument("report row has wrong width");
    if (!rows.empty() && !(row[0] > rows.back()[0]))
      throw InvalidArgument("report time stamps must be strictly increasing");
    rows.push_back(std::move(row));
  }
};

inline const std::vector<std::string>& series2d_columns() {
  static const std::vector<std::string> cols = {
      "t",         "h1_norm", "dissipation", "cum_dissipation", "dissipation_residual",
      "compat_d2u_wall", "compat_far_moment", "radius", "top_mass"};
  return cols;
}

namespace detail {

// Squared H1_x L2_z contributions of one mode: (1 + k^2) * sum q_i c_i |a_i|^2.
inline double weighted_l2(std::span<const double> q, std::span<const cplx> a,
                          std::span<const double> z, bool bracket) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    acc += q[i] * (bracket ? 1.0 + z[i] * z[i] : 1.0) * std::norm(a[i]);
  return acc;
}

}  // namespace detail

/// ||u||^2 in H1_x L2_z plus ||<z> d_z u||^2 in H1_x L2_z (squared norm).
inline double h1_weighted_norm2(const SpectralField& u) {
  const auto& g = u.grid();
  const auto& vg = g.vertical();
  const auto q = vg.quad_weights();
  const auto z = vg.z();
  std::vector<cplx> dz(u.nz());
  double total = 0.0;
  for (int m = 0; m < u.modes(); ++m) {
    const double kk = g.kx(m) * g.kx(m);
    vg.d1<cplx>(u.mode(m), dz);
    const double s = detail::weighted_l2(q, u.mode(m), z, false) + detail::weighted_l2(q, dz, z, true);
    total += g.parseval_weight(m) * (1.0 + kk) * s;
  }
  return total;
}

inline double h1_weighted_norm(const SpectralField& u) { return std::sqrt(h1_weighted_norm2(u)); }

/// ||<z> d_z^2 u||^2 + ||<z> d_x u||^2, both in H1_x L2_z.
inline double dissipation_functional(const SpectralField& u) {
  const auto& g = u.grid();
  const auto& vg = g.vertical();
  const auto q = vg.quad_weights();
  const auto z = vg.z();
  std::vector<cplx> dzz(u.nz());
  double total = 0.0;
  for (int m = 0; m < u.modes(); ++m) {
    const double kk = g.kx(m) * g.kx(m);
    vg.d2<cplx>(u.mode(m), dzz);
    const double s = detail::weighted_l2(q, dzz, z, true) + kk * detail::weighted_l2(q, u.mode(m), z, true);
    total += g.parseval_weight(m) * (1.0 + kk) * s;
  }
  return total;
}

/// Plain ||u||^2 in L2 over the strip.
inline double l2_norm2(const SpectralField& u) {
  const auto& g = u.grid();
  const auto q = g.vertical().quad_weights();
  const auto z = g.vertical().z();
  double total = 0.0;
  for (int m = 0; m < u.modes(); ++m) total += g.parseval_weight(m) * detail::weighted_l2(q, u.mode(m), z, false);
  return total;
}

/// Fraction of the L2 mass that sits in the top 10% of the strip.
inline double top_mass_fraction(const SpectralField& u) {
  const auto& g = u.grid();
  const auto q = g.vertical().quad_weights();
  const auto z = g.vertical().z();
  const double cut = 0.9 * g.vertical().z_max();
  double top = 0.0, all = 0.0;
  for (int m = 0; m < u.modes(); ++m)
    for (int i = 0; i < u.nz(); ++i) {
      const double c = g.parseval_weight(m) * q[i] * std::norm(u(m, i));
      all += c;
      if (z[i] >= cut) top += c;
    }
  return all > 0.0 ? top / all : 0.0;
}

struct MonotonicityResult {
  bool pass = true;
  double min_slack = 0.0;
  std::size_t worst_index = 0;
};

/// Checks norm^2(t_i) + cum_dissipation(t_i) <= budget^2 (1 + rel_tol) at every sample.
inline MonotonicityResult monotonicity_audit(std::span<const double> norm, std::span<const double> cum,
                                             double budget, double rel_tol = 1e-6) {
  if (norm.empty() || norm.size() != cum.size()) throw InvalidArgument("monotonicity audit needs a non-empty report");
  MonotonicityResult r;
  r.min_slack = std::numeric_limits<double>::infinity();
  const double b2 = budget * budget;
  for (std::size_t i = 0; i < norm.size(); ++i) {
    const double slack = b2 - (norm[i] * norm[i] + cum[i]);
    if (slack < r.min_slack) {
      r.min_slack = slack;
      r.worst_index = i;
    }
    if (slack < -rel_tol * b2) r.pass = false;
  }
  return r;
}

inline MonotonicityResult monotonicity_audit(const NormReport& rep, double budget, double rel_tol = 1e-6) {
  const auto n = rep.series("h1_norm");
  const auto c = rep.series("cum_dissipation");
  return monotonicity_audit(n, c, budget, rel_tol);
}

// ---------------------------------------------------------------------------
// Smoothing ladder

struct LadderEntry {
  std::array<int, 3> alpha{};
  double value = 0.0;
  int order() const { return alpha[0] + alpha[1] + alpha[2]; }
};

struct LadderResult {
  std::vector<LadderEntry> entries;
  double c0 = 0.0;
};

namespace detail {

inline double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

// Centered time difference of the given order at snapshot n (needs n +/- reach).
inline SpectralField time_difference(const std::vector<SpectralField>& s, std::size_t n, int order, double h) {
  SpectralField out(s[n].grid_ptr());
  auto& d = out.data();
  auto lin = [&](std::initializer_list<std::pair<int, double>> terms, double scale) {
    for (std::size_t i = 0; i < d.size(); ++i) {
      cplx acc{};
      for (const auto& [off, c] : terms) acc += c * s[std::size_t(int(n) + off)].data()[i];
      d[i] = acc * scale;
    }
  };
  switch (order) {
    case 0: out = s[n]; break;
    case 1: lin({{1, 1.0}, {-1, -1.0}}, 1.0 / (2.0 * h)); break;
    case 2: lin({{1, 1.0}, {0, -2.0}, {-1, 1.0}}, 1.0 / (h * h)); break;
    case 3: lin({{2, 1.0}, {1, -2.0}, {-1, 2.0}, {-2, -1.0}}, 1.0 / (2.0 * h * h * h)); break;
    default: throw InvalidArgument("time derivative order above 3");
  }
  return out;
}

inline void apply_dx_dz(SpectralField& f, int ax, int az) {
  const auto& g = f.grid();
  const auto& vg = g.vertical();
  std::vector<cplx> tmp(f.nz());
  for (int m = 0; m < f.modes(); ++m) {
    auto col = f.mode(m);
    const cplx ik(0.0, g.kx(m));
    for (int r = 0; r < ax; ++r)
      for (auto& v : col) v *= ik;
    for (int r = 0; r < az; ++r) {
      vg.d1<cplx>(std::span<const cplx>(col.data(), col.size()), tmp);
      std::copy(tmp.begin(), tmp.end(), col.begin());
    }
  }
}

}  // namespace detail

/// Ladder of sup_t t^{a1+a2+a3/2} ||d_t^{a1} d_x^{a2} d_z^{a3} u||_{H1} over snapshots
/// sampled at times t0 + n*spacing, plus the least C0 with value <= eps0 C0^|a| |a|!.
inline LadderResult smoothing_ladder(const std::vector<SpectralField>& snaps, double t0, double spacing,
                                     int cap, double eps0) {
  if (snaps.size() < 5) throw InvalidArgument("smoothing ladder needs at least 5 snapshots");
  if (cap < 0 || cap > 3) throw InvalidArgument("ladder order cap must lie in [0,3]");
  if (!(spacing > 0.0)) throw InvalidArgument("snapshot spacing must be positive");
  LadderResult res;
  for (int a1 = 0; a1 <= cap; ++a1)
    for (int a2 = 0; a1 + a2 <= cap; ++a2)
      for (int a3 = 0; a1 + a2 + a3 <= cap; ++a3) {
        LadderEntry e;
        e.alpha = {a1, a2, a3};
        const int reach = (a1 + 1) / 2;
        for (std::size_t n = reach; n + reach < snaps.size(); ++n) {
          const double t = t0 + double(n) * spacing;
          auto d = detail::time_difference(snaps, n, a1, spacing);
          detail::apply_dx_dz(d, a2, a3);
          const double tw = (a1 + a2 + a3) == 0 ? 1.0 : std::pow(t, a1 + a2 + 0.5 * a3);
          e.value = std::max(e.value, tw * h1_weighted_norm(d));
        }
        res.entries.push_back(e);
      }
  if (eps0 > 0.0)
    for (const auto& e : res.entries) {
      const int k = e.order();
      if (k == 0 || e.value == 0.0) continue;
      res.c0 = std::max(res.c0, std::pow(e.value / (eps0 * detail::factorial(k)), 1.0 / k));
    }
  return res;
}

// ---------------------------------------------------------------------------
// Tangential analyticity radius

struct RadiusFit {
  bool determinate = false;
  double radius = 0.0;
  int active_modes = 0;
};

/// Least-squares slope of log(amplitude) against wavenumber over the leading
/// contiguous run of amplitudes above floor * max amplitude; radius = -slope.
inline RadiusFit radius_fit(std::span<const double> k, std::span<const double> amp, double floor = 1e-14,
                            int min_active = 6) {
  RadiusFit r;
  double peak = 0.0;
  for (double a : amp) peak = std::max(peak, a);
  if (peak == 0.0) return r;
  std::size_t n = 0;
  while (n < amp.size() && amp[n] > floor * peak && amp[n] > 0.0) ++n;
  r.active_modes = int(n);
  if (int(n) < min_active) return r;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double y = std::log(amp[i]);
    sx += k[i];
    sy += y;
    sxx += k[i] * k[i];
    sxy += k[i] * y;
  }
  const double dn = double(n);
  const double slope = (dn * sxy - sx * sy) / (dn * sxx - sx * sx);
  r.determinate = true;
  r.radius = -slope;
  return r;
}

/// Radius fit of the spectrum ||u_k||_{L2_z}, k = 1 .. dealiasing limit (2D fields).
inline RadiusFit tangential_radius_fit(const SpectralField& u, double floor = 1e-14) {
  const auto& g = u.grid();
  const auto q = g.vertical().quad_weights();
  std::vector<double> k, amp;
  for (int ix = 1; ix <= g.dealias_kx_max(); ++ix) {
    const int m = ix * g.ky_count();
    double s = 0.0;
    for (int i = 0; i < u.nz(); ++i) s += q[i] * std::norm(u(m, i));
    k.push_back(g.kx(m));
    amp.push_back(std::sqrt(s));
  }
  return radius_fit(k, amp, floor);
}

}  // namespace psl
