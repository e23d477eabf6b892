#pragma once

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <mutex>
#include <span>
#include <vector>

#include "psl/common.hpp"
#include "psl/grid.hpp"

namespace psl {

/// Complex tangential-mode x vertical-node array. Mode index is outermost.
///
/// Only the kx >= 0 half of the spectrum is stored; the -kx amplitudes are
/// the complex conjugates, so every stored field represents a real function.
class SpectralField {
 public:
  SpectralField() = default;
  explicit SpectralField(GridPtr grid)
      : grid_(std::move(grid)), data_(std::size_t(grid_->mode_count()) * grid_->nz()) {}

  const GridPtr& grid_ptr() const { return grid_; }
  const HalfStripGrid& grid() const { return *grid_; }
  bool empty() const { return !grid_; }
  int modes() const { return grid_->mode_count(); }
  int nz() const { return grid_->nz(); }

  std::span<cplx> mode(int m) { return {data_.data() + std::size_t(m) * nz(), std::size_t(nz())}; }
  std::span<const cplx> mode(int m) const {
    return {data_.data() + std::size_t(m) * nz(), std::size_t(nz())};
  }
  cplx& operator()(int m, int i) { return data_[std::size_t(m) * nz() + i]; }
  const cplx& operator()(int m, int i) const { return data_[std::size_t(m) * nz() + i]; }

  std::vector<cplx>& data() { return data_; }
  const std::vector<cplx>& data() const { return data_; }

  SpectralField& operator+=(const SpectralField& o) {
    check_same(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  SpectralField& operator-=(const SpectralField& o) {
    check_same(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
  }
  SpectralField& operator*=(double c) {
    for (auto& v : data_) v *= c;
    return *this;
  }
  friend SpectralField operator*(double c, SpectralField f) { return f *= c; }

  void set_zero() { std::fill(data_.begin(), data_.end(), cplx{}); }

  /// Re-imposes homogeneous Dirichlet values at z = 0 and z = Z_max.
  void zero_walls() {
    for (int m = 0; m < modes(); ++m) {
      (*this)(m, 0) = 0.0;
      (*this)(m, nz() - 1) = 0.0;
    }
  }

  /// Zeroes Nyquist modes and restores the conjugate symmetry that the
  /// half-spectrum storage cannot express on its own (kx = 0 line/plane).
  void enforce_symmetry() {
    const auto& g = grid();
    for (int m = 0; m < modes(); ++m)
      if (g.is_nyquist(m))
        for (auto& v : mode(m)) v = 0.0;
    if (!g.is_3d()) {
      for (auto& v : mode(0)) v = v.real();
      return;
    }
    const int ny = g.ky_count();
    for (int iy = 0; iy < ny; ++iy) {
      const int jy = (ny - iy) % ny;
      if (jy < iy) continue;
      auto a = mode(iy);
      auto b = mode(jy);
      for (int i = 0; i < nz(); ++i) {
        if (iy == jy) {
          a[i] = a[i].real();
        } else {
          const cplx avg = 0.5 * (a[i] + std::conj(b[i]));
          a[i] = avg;
          b[i] = std::conj(avg);
        }
      }
    }
  }

  /// Largest violation of the conjugate-symmetry constraints relative to the
  /// largest amplitude (0 for the zero field).
  double symmetry_defect() const {
    const auto& g = grid();
    double scale = 0.0, defect = 0.0;
    for (const auto& v : data_) scale = std::max(scale, std::abs(v));
    if (scale == 0.0) return 0.0;
    if (!g.is_3d()) {
      for (const auto& v : mode(0)) defect = std::max(defect, std::abs(v.imag()));
    } else {
      const int ny = g.ky_count();
      for (int iy = 0; iy < ny; ++iy) {
        const int jy = (ny - iy) % ny;
        for (int i = 0; i < nz(); ++i)
          defect = std::max(defect, std::abs(mode(iy)[i] - std::conj(mode(jy)[i])));
      }
    }
    for (int m = 0; m < modes(); ++m)
      if (g.is_nyquist(m))
        for (const auto& v : mode(m)) defect = std::max(defect, std::abs(v));
    return defect / scale;
  }

  bool all_finite() const {
    for (const auto& v : data_)
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    return true;
  }

  void check_same(const SpectralField& o) const {
    if (!grid_ || !o.grid_ || !grid_->same_as(*o.grid_))
      throw InvalidArgument("grid mismatch between field operands");
  }

 private:
  GridPtr grid_;
  std::vector<cplx> data_;
};

inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

/// Real-to-complex transforms along x for every vertical node of a 2D grid.
/// Physical samples are stored x-major: phys[ix * nz + iz].
/// Amplitudes follow u(x) = sum_k u_k exp(i k x), so u_k = (1/nx) sum_j u_j e^{-ikx_j}.
class TangentialTransform {
 public:
  explicit TangentialTransform(const HalfStripGrid& grid) : nx_(grid.nx()), nz_(grid.nz()) {
    if (grid.is_3d()) throw InvalidArgument("tangential transform supports 2D grids only");
    const int nk = grid.kx_count();
    real_ = fftw_alloc_real(std::size_t(nx_) * nz_);
    spec_ = fftw_alloc_complex(std::size_t(nk) * nz_);
    int n[1] = {nx_};
    std::lock_guard lock(fftw_planner_mutex());
    forward_ = fftw_plan_many_dft_r2c(1, n, nz_, real_, nullptr, nz_, 1, spec_, nullptr, nz_, 1,
                                      FFTW_ESTIMATE);
    backward_ = fftw_plan_many_dft_c2r(1, n, nz_, spec_, nullptr, nz_, 1, real_, nullptr, nz_, 1,
                                       FFTW_ESTIMATE);
  }
  TangentialTransform(const TangentialTransform&) = delete;
  TangentialTransform& operator=(const TangentialTransform&) = delete;
  ~TangentialTransform() {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
    fftw_free(real_);
    fftw_free(spec_);
  }

  int nx() const { return nx_; }
  int nz() const { return nz_; }

  void to_physical(const SpectralField& f, std::span<double> phys) {
    const std::size_t count = f.data().size();
    auto* dst = reinterpret_cast<cplx*>(spec_);
    std::copy(f.data().begin(), f.data().end(), dst);
    // Nyquist amplitude is kept at zero; c2r would otherwise double it.
    for (int i = 0; i < nz_; ++i) dst[std::size_t(nx_ / 2) * nz_ + i] = 0.0;
    (void)count;
    fftw_execute(backward_);
    std::copy(real_, real_ + std::size_t(nx_) * nz_, phys.begin());
  }

  void to_spectral(std::span<const double> phys, SpectralField& f) {
    std::copy(phys.begin(), phys.end(), real_);
    fftw_execute(forward_);
    const auto* src = reinterpret_cast<const cplx*>(spec_);
    const double scale = 1.0 / nx_;
    for (std::size_t i = 0; i < f.data().size(); ++i) f.data()[i] = src[i] * scale;
  }

  std::vector<double> to_physical(const SpectralField& f) {
    std::vector<double> out(std::size_t(nx_) * nz_);
    to_physical(f, out);
    return out;
  }

 private:
  int nx_, nz_;
  double* real_ = nullptr;
  fftw_complex* spec_ = nullptr;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

/// Tangential position of physical sample ix.
inline double x_node(const HalfStripGrid& g, int ix) { return g.config().lx * ix / g.nx(); }

}  // namespace psl
