#pragma once

#include <cmath>
#include <complex>
#include <span>
#include <vector>

#include "psl/common.hpp"

namespace psl {

/// Banded matrix with LU factorization by partial pivoting.
///
/// Storage follows the LAPACK general-band layout: entry (i, j) lives at
/// row kl + ku + i - j of column j, with kl extra rows reserved for the
/// fill-in produced by row interchanges.
template <class T>
class BandedLU {
 public:
  BandedLU(int n, int kl, int ku)
      : n_(n), kl_(kl), ku_(ku), ld_(2 * kl + ku + 1), ab_(std::size_t(ld_) * n, T{}), piv_(n) {
    if (n <= 0 || kl < 0 || ku < 0) throw InvalidArgument("invalid band dimensions");
  }

  int size() const { return n_; }

  void set(int i, int j, T value) { at(i, j) = value; }
  void add(int i, int j, T value) { at(i, j) += value; }

  T& at(int i, int j) {
    if (i - j > kl_ || j - i > ku_ || i < 0 || j < 0 || i >= n_ || j >= n_)
      throw InvalidArgument("entry outside the band");
    return ab_[std::size_t(j) * ld_ + (kl_ + ku_ + i - j)];
  }

  /// In-place factorization; throws NumericalError on an exactly zero pivot.
  void factor() {
    const int kv = kl_ + ku_;
    int ju = 0;
    for (int j = 0; j < n_; ++j) {
      const int km = std::min(kl_, n_ - 1 - j);
      int jp = 0;
      double best = std::abs(ab(kv, j));
      for (int p = 1; p <= km; ++p) {
        const double v = std::abs(ab(kv + p, j));
        if (v > best) {
          best = v;
          jp = p;
        }
      }
      piv_[j] = j + jp;
      if (best == 0.0) throw NumericalError("singular banded matrix");
      ju = std::max(ju, std::min(j + ku_ + jp, n_ - 1));
      if (jp != 0)
        for (int c = j; c <= ju; ++c) std::swap(ab(kv + j - c, c), ab(kv + j + jp - c, c));
      const T pivot = ab(kv, j);
      for (int p = 1; p <= km; ++p) ab(kv + p, j) /= pivot;
      for (int c = j + 1; c <= ju; ++c) {
        const T t = ab(kv + j - c, c);
        if (t == T{}) continue;
        for (int p = 1; p <= km; ++p) ab(kv + j + p - c, c) -= ab(kv + p, j) * t;
      }
    }
    factored_ = true;
  }

  bool factored() const { return factored_; }

  /// Solves A x = b in place (requires factor()).
  template <class U>
  void solve(std::span<U> b) const {
    if (!factored_) throw InvalidArgument("banded matrix not factored");
    const int kv = kl_ + ku_;
    for (int j = 0; j + 1 < n_; ++j) {
      const int km = std::min(kl_, n_ - 1 - j);
      const int l = piv_[j];
      if (l != j) std::swap(b[l], b[j]);
      const U bj = b[j];
      for (int p = 1; p <= km; ++p) b[j + p] -= ab(kv + p, j) * bj;
    }
    for (int j = n_ - 1; j >= 0; --j) {
      b[j] /= ab(kv, j);
      const U bj = b[j];
      for (int i = std::max(0, j - kv); i < j; ++i) b[i] -= ab(kv + i - j, j) * bj;
    }
  }

 private:
  T& ab(int r, int c) { return ab_[std::size_t(c) * ld_ + r]; }
  const T& ab(int r, int c) const { return ab_[std::size_t(c) * ld_ + r]; }

  int n_, kl_, ku_, ld_;
  std::vector<T> ab_;
  std::vector<int> piv_;
  bool factored_ = false;
};

}  // namespace psl
