#pragma once

#include <array>
#include <cmath>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "psl/common.hpp"

namespace psl {

/// Finite-difference weights (Fornberg's recursion) for derivatives of order
/// 0..max_order at `x0` from samples at `nodes`. Result is indexed
/// [order][node].
inline std::vector<std::vector<double>> fd_weights(double x0, std::span<const double> nodes,
                                                   int max_order) {
  const int n = static_cast<int>(nodes.size());
  std::vector<std::vector<double>> c(max_order + 1, std::vector<double>(n, 0.0));
  double c1 = 1.0;
  double c4 = nodes[0] - x0;
  c[0][0] = 1.0;
  for (int i = 1; i < n; ++i) {
    const int mn = std::min(i, max_order);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = nodes[i] - x0;
    for (int j = 0; j < i; ++j) {
      const double c3 = nodes[i] - nodes[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k)
          c[k][i] = c1 * (k * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
        c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
      }
      for (int k = mn; k >= 1; --k) c[k][j] = (c4 * c[k][j] - k * c[k - 1][j]) / c3;
      c[0][j] = c4 * c[0][j] / c3;
    }
    c1 = c2;
  }
  return c;
}

/// Quadrature weights that integrate the interpolating polynomial through
/// `nodes` exactly over [nodes.front(), nodes.back()].
inline std::vector<double> interpolatory_weights(std::span<const double> nodes) {
  const std::size_t n = nodes.size();
  const double a = nodes.front();
  const double len = nodes.back() - a;
  // Moment equations in the scaled coordinate s = (z - a)/len on [0, 1].
  std::vector<std::vector<double>> m(n, std::vector<double>(n + 1, 0.0));
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t j = 0; j < n; ++j) m[p][j] = std::pow((nodes[j] - a) / len, double(p));
    m[p][n] = 1.0 / double(p + 1);
  }
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
    std::swap(m[col], m[piv]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = m[r][col] / m[col][col];
      for (std::size_t k = col; k <= n; ++k) m[r][k] -= f * m[col][k];
    }
  }
  std::vector<double> w(n);
  for (std::size_t j = 0; j < n; ++j) w[j] = m[j][n] / m[j][j] * len;
  return w;
}

/// Vertical discretization of [0, Z_max]: nodes, quadratures and stencils.
///
/// Nodes follow z(s) = Z_max sinh(stretch*s)/sinh(stretch) for uniform
/// s in [0,1] (uniform when stretch = 0), clustering toward the wall.
///
/// Two quadratures are kept:
///  - `quad_weights`: composite interpolatory rule (Simpson-type on node
///    pairs, a four-node panel at the end when the interval count is odd).
///    Used by every norm.
///  - `energy_weights`: (h_{i-1}+h_i)/2. The three-point operator `d2_3pt`
///    is self-adjoint in this inner product for Dirichlet data, which makes
///    the discrete summation-by-parts identities exact.
class VerticalGrid {
 public:
  static constexpr int kStencil = 5;

  VerticalGrid(double z_max, int nz, double stretch) : z_max_(z_max), stretch_(stretch) {
    if (!(z_max > 0.0) || !std::isfinite(z_max))
      throw InvalidArgument("vertical truncation height must be positive");
    if (nz < 9) throw InvalidArgument("vertical node count must be at least 9");
    if (!(stretch >= 0.0) || !std::isfinite(stretch))
      throw InvalidArgument("stretch must be a non-negative finite number");
    z_.resize(nz);
    for (int i = 0; i < nz; ++i) {
      const double s = double(i) / double(nz - 1);
      z_[i] = stretch == 0.0 ? z_max * s : z_max * std::sinh(stretch * s) / std::sinh(stretch);
    }
    z_.front() = 0.0;
    z_.back() = z_max;
    for (int i = 0; i + 1 < nz; ++i)
      if (!(z_[i + 1] > z_[i])) throw InvalidArgument("vertical nodes must be strictly increasing");

    h_.resize(nz - 1);
    for (int i = 0; i + 1 < nz; ++i) h_[i] = z_[i + 1] - z_[i];

    energy_w_.assign(nz, 0.0);
    for (int i = 0; i + 1 < nz; ++i) {
      energy_w_[i] += 0.5 * h_[i];
      energy_w_[i + 1] += 0.5 * h_[i];
    }

    quad_w_.assign(nz, 0.0);
    const int intervals = nz - 1;
    const int pairs_end = (intervals % 2 == 0) ? intervals : intervals - 3;
    for (int i = 0; i < pairs_end; i += 2) add_panel(i, 3);
    if (pairs_end != intervals) add_panel(pairs_end, 4);

    d1_.resize(nz);
    d2_.resize(nz);
    start_.resize(nz);
    for (int i = 0; i < nz; ++i) {
      const int s = std::clamp(i - kStencil / 2, 0, nz - kStencil);
      start_[i] = s;
      const auto w = fd_weights(z_[i], std::span<const double>(z_.data() + s, kStencil), 2);
      for (int j = 0; j < kStencil; ++j) {
        d1_[i][j] = w[1][j];
        d2_[i][j] = w[2][j];
      }
    }

    lo_.assign(nz, 0.0);
    di_.assign(nz, 0.0);
    up_.assign(nz, 0.0);
    for (int i = 1; i + 1 < nz; ++i) {
      const double hm = h_[i - 1], hp = h_[i];
      lo_[i] = 2.0 / (hm * (hm + hp));
      up_[i] = 2.0 / (hp * (hm + hp));
      di_[i] = -(lo_[i] + up_[i]);
    }
  }

  int size() const { return static_cast<int>(z_.size()); }
  double z_max() const { return z_max_; }
  double stretch() const { return stretch_; }
  std::span<const double> z() const { return z_; }
  std::span<const double> spacing() const { return h_; }
  std::span<const double> quad_weights() const { return quad_w_; }
  std::span<const double> energy_weights() const { return energy_w_; }

  /// Three-point second-derivative coefficients at interior node i:
  /// (d2 f)_i = lower(i) f_{i-1} + diag(i) f_i + upper(i) f_{i+1}.
  double lower(int i) const { return lo_[i]; }
  double diag(int i) const { return di_[i]; }
  double upper(int i) const { return up_[i]; }

  /// Fourth-order (five-point) first derivative at every node.
  template <class T>
  void d1(std::span<const T> f, std::span<T> out) const {
    apply(d1_, f, out);
  }
  /// Five-point second derivative at every node (one-sided at the ends).
  template <class T>
  void d2(std::span<const T> f, std::span<T> out) const {
    apply(d2_, f, out);
  }
  /// Three-point second derivative at interior nodes; end values set to zero.
  template <class T>
  void d2_3pt(std::span<const T> f, std::span<T> out) const {
    const int n = size();
    out[0] = T{};
    out[n - 1] = T{};
    for (int i = 1; i + 1 < n; ++i) out[i] = lo_[i] * f[i - 1] + di_[i] * f[i] + up_[i] * f[i + 1];
  }

  template <class T>
  std::vector<T> d1(std::span<const T> f) const {
    std::vector<T> out(f.size());
    d1<T>(f, out);
    return out;
  }
  template <class T>
  std::vector<T> d2(std::span<const T> f) const {
    std::vector<T> out(f.size());
    d2<T>(f, out);
    return out;
  }

  /// High-order quadrature of f over [0, Z_max].
  template <class T>
  T integrate(std::span<const T> f) const {
    T acc{};
    for (int i = 0; i < size(); ++i) acc += quad_w_[i] * f[i];
    return acc;
  }

  /// Cumulative trapezoid integral from z = 0 (value 0 at the wall).
  template <class T>
  void cumulative_trapezoid(std::span<const T> f, std::span<T> out) const {
    out[0] = T{};
    for (int i = 0; i + 1 < size(); ++i) out[i + 1] = out[i] + 0.5 * h_[i] * (f[i] + f[i + 1]);
  }

  bool same_as(const VerticalGrid& o) const {
    return z_max_ == o.z_max_ && stretch_ == o.stretch_ && z_.size() == o.z_.size();
  }

 private:
  void add_panel(int first, int count) {
    const auto w = interpolatory_weights(std::span<const double>(z_.data() + first, count));
    for (int j = 0; j < count; ++j) quad_w_[first + j] += w[j];
  }

  template <class T>
  void apply(const std::vector<std::array<double, kStencil>>& st, std::span<const T> f,
             std::span<T> out) const {
    for (int i = 0; i < size(); ++i) {
      T acc{};
      const int s = start_[i];
      for (int j = 0; j < kStencil; ++j) acc += st[i][j] * f[s + j];
      out[i] = acc;
    }
  }

  double z_max_;
  double stretch_;
  std::vector<double> z_, h_, quad_w_, energy_w_;
  std::vector<int> start_;
  std::vector<std::array<double, kStencil>> d1_, d2_;
  std::vector<double> lo_, di_, up_;
};

/// Grid parameters as they appear in scenario configs. `ny == 0` marks a 2D grid.
struct GridConfig {
  double lx = 2.0 * kPi;
  int nx = 64;
  double z_max = 20.0;
  int nz = 201;
  double stretch = 0.0;
  double ly = 2.0 * kPi;
  int ny = 0;

  bool operator==(const GridConfig&) const = default;
};

/// Periodic tangential Fourier modes times truncated vertical nodes.
///
/// Spectral storage keeps kx = 0..nx/2 (real-to-complex half spectrum) and,
/// in 3D, the full ky range in FFT order. Mode index m = ix*ny_modes + iy.
class HalfStripGrid {
 public:
  explicit HalfStripGrid(const GridConfig& cfg)
      : cfg_(cfg), vertical_(cfg.z_max, cfg.nz, cfg.stretch) {
    if (cfg.nx % 2 != 0) throw InvalidArgument("tangential mode count must be even");
    if (cfg.nx < 4) throw InvalidArgument("tangential mode count must be at least 4");
    if (!(cfg.lx > 0.0)) throw InvalidArgument("tangential period must be positive");
    if (cfg.ny != 0) {
      if (cfg.ny % 2 != 0) throw InvalidArgument("second tangential mode count must be even");
      if (cfg.ny < 4) throw InvalidArgument("second tangential mode count must be at least 4");
      if (!(cfg.ly > 0.0)) throw InvalidArgument("second tangential period must be positive");
    }
  }

  const GridConfig& config() const { return cfg_; }
  const VerticalGrid& vertical() const { return vertical_; }
  bool is_3d() const { return cfg_.ny != 0; }
  int nz() const { return cfg_.nz; }
  int nx() const { return cfg_.nx; }
  int kx_count() const { return cfg_.nx / 2 + 1; }
  int ky_count() const { return is_3d() ? cfg_.ny : 1; }
  int mode_count() const { return kx_count() * ky_count(); }

  int kx_index(int mode) const { return mode / ky_count(); }
  int ky_index(int mode) const { return mode % ky_count(); }
  /// Signed integer wavenumber index in y (FFT ordering).
  int ky_signed(int iy) const { return iy <= cfg_.ny / 2 ? iy : iy - cfg_.ny; }

  double kx(int mode) const { return 2.0 * kPi * kx_index(mode) / cfg_.lx; }
  double ky(int mode) const {
    return is_3d() ? 2.0 * kPi * ky_signed(ky_index(mode)) / cfg_.ly : 0.0;
  }
  bool is_nyquist(int mode) const {
    if (kx_index(mode) == cfg_.nx / 2) return true;
    return is_3d() && ky_index(mode) == cfg_.ny / 2;
  }

  /// Parseval factor: integral of |field|^2 over the tangential torus equals
  /// sum over stored modes of parseval_weight(m) * |amplitude_m|^2.
  double parseval_weight(int mode) const {
    const double area = is_3d() ? cfg_.lx * cfg_.ly : cfg_.lx;
    return area * (kx_index(mode) == 0 ? 1.0 : 2.0);
  }

  /// Largest retained kx index under the 2/3 dealiasing rule.
  int dealias_kx_max() const { return (cfg_.nx - 1) / 3; }

  bool same_as(const HalfStripGrid& o) const { return this == &o || cfg_ == o.cfg_; }

 private:
  GridConfig cfg_;
  VerticalGrid vertical_;
};

using GridPtr = std::shared_ptr<const HalfStripGrid>;

inline GridPtr make_grid(const GridConfig& cfg) { return std::make_shared<const HalfStripGrid>(cfg); }

/// <z> and the Gaussian weight mu_lambda(t, z) sampled at the nodes.
struct WeightProfile {
  std::vector<double> bracket_z;
  double lambda = 0.0;
  double t = 0.0;
  std::vector<double> mu_values;
};

inline double bracket(double z) { return std::sqrt(1.0 + z * z); }

inline double gaussian_weight(double lambda, double t, double z) {
  return std::exp(lambda * z * z / (4.0 * (1.0 + t)));
}

inline WeightProfile weight_values(const VerticalGrid& grid, double lambda, double t) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw InvalidArgument("weight exponent must lie in [0,1]");
  if (!(t >= 0.0)) throw InvalidArgument("weight time must be non-negative");
  WeightProfile wp;
  wp.lambda = lambda;
  wp.t = t;
  const auto z = grid.z();
  wp.bracket_z.resize(z.size());
  wp.mu_values.resize(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    wp.bracket_z[i] = bracket(z[i]);
    wp.mu_values[i] = gaussian_weight(lambda, t, z[i]);
  }
  return wp;
}

inline WeightProfile weight_values(const HalfStripGrid& grid, double lambda, double t) {
  return weight_values(grid.vertical(), lambda, t);
}

}  // namespace psl
