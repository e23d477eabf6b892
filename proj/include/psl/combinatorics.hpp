#pragma once

#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "psl/common.hpp"
#include "psl/grid.hpp"

namespace psl {

using MultiIndex = std::array<int, 3>;

inline int order(const MultiIndex& a) { return a[0] + a[1] + a[2]; }

inline constexpr int kWeightCap = 30;

/// Factorials 0!..30! in double precision, cross-checked against exact
/// 128-bit integer products on first use.
inline const std::array<double, kWeightCap + 1>& factorial_table() {
  static const auto table = [] {
    std::array<double, kWeightCap + 1> t{};
    unsigned __int128 exact = 1;
    t[0] = 1.0;
    for (int n = 1; n <= kWeightCap; ++n) {
      exact *= unsigned(n);
      t[n] = t[n - 1] * n;
      const double from_exact = static_cast<double>(exact);
      if (std::abs(from_exact - t[n]) > 1e-15 * from_exact)
        throw NumericalError("factorial cache disagrees with exact integer factorial");
    }
    return t;
  }();
  return table;
}

/// M_{r,alpha} = r^{|alpha|} (|alpha|+1)^4 / |alpha|!.
inline double gevrey_m(double r, const MultiIndex& a) {
  if (!(r > 0.0 && r < 1.0)) throw InvalidArgument("Gevrey parameter r must lie in (0,1)");
  const int n = order(a);
  if (a[0] < 0 || a[1] < 0 || a[2] < 0) throw InvalidArgument("multi-index entries must be non-negative");
  if (n > kWeightCap) throw InvalidArgument("multi-index order exceeds the weight cap");
  return std::pow(r, n) * std::pow(n + 1.0, 4) / factorial_table()[n];
}

/// L_{rho,m} = rho^{m+1} / m!.
inline double gevrey_l(double rho, int m) {
  if (!(rho > 0.0)) throw InvalidArgument("radius must be positive");
  if (m < 0 || m > kWeightCap) throw InvalidArgument("weight index outside [0, cap]");
  return std::pow(rho, m + 1) / factorial_table()[m];
}

namespace detail {

inline double log_m(double r, int n) { return n * std::log(r) + 4.0 * std::log(n + 1.0) - std::lgamma(n + 1.0); }

inline double log_binomial(const MultiIndex& a, const MultiIndex& b) {
  double s = 0.0;
  for (int i = 0; i < 3; ++i)
    s += std::lgamma(a[i] + 1.0) - std::lgamma(b[i] + 1.0) - std::lgamma(a[i] - b[i] + 1.0);
  return s;
}

}  // namespace detail

enum class Inequality { Ineq3, Ineq4, Ineq5, Ineq6 };

inline Inequality parse_inequality(const std::string& s) {
  if (s == "ineq3") return Inequality::Ineq3;
  if (s == "ineq4") return Inequality::Ineq4;
  if (s == "ineq5") return Inequality::Ineq5;
  if (s == "ineq6") return Inequality::Ineq6;
  throw InvalidArgument("unknown inequality id: " + s);
}

inline std::string inequality_name(Inequality id) {
  switch (id) {
    case Inequality::Ineq3: return "ineq3";
    case Inequality::Ineq4: return "ineq4";
    case Inequality::Ineq5: return "ineq5";
    case Inequality::Ineq6: return "ineq6";
  }
  return "?";
}

/// LHS / (RHS without C) for one admissible pair; returns NaN when the pair
/// violates the side conditions of the chosen inequality.
inline double inequality_ratio(Inequality id, double r, const MultiIndex& a, const MultiIndex& b) {
  if (a[2] < 1) return std::nan("");
  for (int i = 0; i < 3; ++i)
    if (b[i] < 0 || b[i] > a[i]) return std::nan("");
  const int na = order(a), nb = order(b);
  double log_lhs = detail::log_binomial(a, b) - std::log(double(na)) + detail::log_m(r, na);
  double rhs = 0.0;
  switch (id) {
    case Inequality::Ineq3:  // beta3 = 0, partner alpha - beta + (0,1,-1)
      if (b[2] != 0) return std::nan("");
      log_lhs -= detail::log_m(r, nb) + detail::log_m(r, na - nb);
      rhs = std::pow(nb + 1.0, -4) + std::pow(na - nb + 1.0, -4);
      break;
    case Inequality::Ineq4:  // beta3 >= 1, beta_* and alpha - beta + (0,1,0)
      if (b[2] < 1) return std::nan("");
      log_lhs -= detail::log_m(r, nb - 1) + detail::log_m(r, na - nb + 1);
      rhs = std::pow(double(nb), -4) + std::pow(na - nb + 2.0, -4);
      break;
    case Inequality::Ineq5:  // beta3 = 0, extra factor r, partner alpha - beta + (0,0,1)
      if (b[2] != 0) return std::nan("");
      log_lhs += std::log(r) - detail::log_m(r, nb) - detail::log_m(r, na - nb + 1);
      rhs = std::pow(nb + 1.0, -4) + std::pow(na - nb + 2.0, -4);
      break;
    case Inequality::Ineq6:  // beta3 >= 1, beta + (0,1,-1) and alpha - beta
      if (b[2] < 1) return std::nan("");
      log_lhs -= detail::log_m(r, nb) + detail::log_m(r, na - nb);
      rhs = std::pow(nb + 1.0, -4) + std::pow(na - nb + 1.0, -4);
      break;
  }
  return std::exp(log_lhs) / rhs;
}

struct ScanResult {
  Inequality id = Inequality::Ineq3;
  double r = 0.0;
  int cap = 0;
  double constant = 0.0;
  MultiIndex alpha{}, beta{};
  long long pairs = 0;
};

/// Sup of the ratio over all admissible (alpha, beta) with |alpha| <= cap.
/// Enumeration order is fixed and ties keep the first maximizer.
inline ScanResult inequality_scan(Inequality id, double r, int cap) {
  if (!(r > 0.0 && r < 1.0)) throw InvalidArgument("Gevrey parameter r must lie in (0,1)");
  if (cap < 1 || cap > kWeightCap) throw InvalidArgument("scan cap must lie in [1, 30]");
  ScanResult res;
  res.id = id;
  res.r = r;
  res.cap = cap;
  for (int n = 1; n <= cap; ++n)
    for (int a0 = 0; a0 <= n; ++a0)
      for (int a1 = 0; a0 + a1 <= n; ++a1) {
        const MultiIndex a{a0, a1, n - a0 - a1};
        if (a[2] < 1) continue;
        for (int b0 = 0; b0 <= a[0]; ++b0)
          for (int b1 = 0; b1 <= a[1]; ++b1)
            for (int b2 = 0; b2 <= a[2]; ++b2) {
              const MultiIndex b{b0, b1, b2};
              const double q = inequality_ratio(id, r, a, b);
              if (std::isnan(q)) continue;
              ++res.pairs;
              if (q > res.constant) {
                res.constant = q;
                res.alpha = a;
                res.beta = b;
              }
            }
      }
  if (res.pairs == 0) throw InvalidArgument("no admissible index pairs below the cap");
  return res;
}

/// Fitted constant in |alpha| M_{r,alpha} <= C r M_{r,beta} with |beta| = |alpha| - 1.
inline double recurrence_constant(double r, int cap) {
  double c = 0.0;
  for (int n = 1; n <= cap; ++n) {
    const double lhs = n * gevrey_m(r, {0, 0, n});
    const double rhs = r * gevrey_m(r, {0, 0, n - 1});
    c = std::max(c, lhs / rhs);
  }
  return c;
}

/// [sum_m (sum_j p_j q_{m-j})^2]^{1/2} / (||q||_2 sum p).
inline double young_check(std::span<const double> p, std::span<const double> q) {
  for (double v : p)
    if (v < 0.0 || !std::isfinite(v)) throw InvalidArgument("sequences must be non-negative and finite");
  for (double v : q)
    if (v < 0.0 || !std::isfinite(v)) throw InvalidArgument("sequences must be non-negative and finite");
  if (p.empty() || q.empty()) return 0.0;
  double lhs = 0.0;
  for (std::size_t m = 0; m < p.size() + q.size() - 1; ++m) {
    double c = 0.0;
    for (std::size_t j = 0; j <= m && j < p.size(); ++j)
      if (m - j < q.size()) c += p[j] * q[m - j];
    lhs += c * c;
  }
  double q2 = 0.0, ps = 0.0;
  for (double v : q) q2 += v * v;
  for (double v : p) ps += v;
  const double rhs = std::sqrt(q2) * ps;
  return rhs == 0.0 ? 0.0 : std::sqrt(lhs) / rhs;
}

/// ||h/z||_{L2} / (2 ||d_z h||_{L2}); the value at z = 0 uses h/z -> d_z h(0).
inline double hardy_check(const VerticalGrid& g, std::span<const double> h) {
  double peak = 0.0;
  for (double v : h) peak = std::max(peak, std::abs(v));
  if (peak == 0.0) return 0.0;
  if (std::abs(h[0]) > 1e-12 * peak) throw InvalidArgument("Hardy check needs h(0) = 0");
  const auto d = g.d1<double>(h);
  const auto z = g.z();
  std::vector<double> a(h.size()), b(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double hz = i == 0 ? d[0] : h[i] / z[i];
    a[i] = hz * hz;
    b[i] = d[i] * d[i];
  }
  const double na = std::sqrt(g.integrate<double>(a));
  const double nb = std::sqrt(g.integrate<double>(b));
  return nb == 0.0 ? 0.0 : na / (2.0 * nb);
}

}  // namespace psl
