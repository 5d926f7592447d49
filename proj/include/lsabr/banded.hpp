#pragma once

// Banded LU factorization with partial pivoting (row interchanges applied as
// the elimination proceeds, the same layout as LAPACK's gbtrf/gbtrs).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace lsabr {

class BandedMatrix {
 public:
  BandedMatrix(std::size_t n, std::size_t kl, std::size_t ku)
      : n_(n), kl_(kl), ku_(ku), width_(2 * kl + ku + 1), a_(n * width_, 0.0) {}

  [[nodiscard]] std::size_t size() const { return n_; }
  [[nodiscard]] std::size_t lower() const { return kl_; }
  [[nodiscard]] std::size_t upper() const { return ku_; }

  /// Entry (i, j); j must lie in [i - kl, i + ku] before factorization.
  double& at(std::size_t i, std::size_t j) { return a_[i * width_ + (j + kl_ - i)]; }
  [[nodiscard]] double at(std::size_t i, std::size_t j) const { return a_[i * width_ + (j + kl_ - i)]; }

  [[nodiscard]] bool in_band(std::size_t i, std::size_t j) const { return j + kl_ >= i && j <= i + ku_; }

  /// y = A x (only valid before factorization).
  void multiply(std::span<const double> x, std::span<double> y) const {
    for (std::size_t i = 0; i < n_; ++i) {
      const std::size_t c0 = i >= kl_ ? i - kl_ : 0;
      const std::size_t c1 = std::min(n_ - 1, i + ku_);
      double s = 0.0;
      for (std::size_t c = c0; c <= c1; ++c) s += at(i, c) * x[c];
      y[i] = s;
    }
  }

 private:
  friend class BandedLU;
  std::size_t n_, kl_, ku_, width_;
  std::vector<double> a_;
};

class BandedLU {
 public:
  explicit BandedLU(BandedMatrix m) : m_(std::move(m)), piv_(m_.n_) { factor(); }

  /// Solves in place.
  void solve(std::span<double> b) const {
    const std::size_t n = m_.n_, kl = m_.kl_, span_u = m_.kl_ + m_.ku_;
    for (std::size_t k = 0; k < n; ++k) {
      if (piv_[k] != k) std::swap(b[k], b[piv_[k]]);
      const std::size_t r1 = std::min(n - 1, k + kl);
      const double bk = b[k];
      for (std::size_t r = k + 1; r <= r1; ++r) b[r] -= m_.at(r, k) * bk;
    }
    for (std::size_t kk = n; kk-- > 0;) {
      const std::size_t c1 = std::min(n - 1, kk + span_u);
      double s = b[kk];
      for (std::size_t c = kk + 1; c <= c1; ++c) s -= m_.at(kk, c) * b[c];
      b[kk] = s / m_.at(kk, kk);
    }
  }

 private:
  void factor() {
    const std::size_t n = m_.n_, kl = m_.kl_, span_u = m_.kl_ + m_.ku_;
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t r1 = std::min(n - 1, k + kl);
      std::size_t p = k;
      double best = std::abs(m_.at(k, k));
      for (std::size_t r = k + 1; r <= r1; ++r) {
        if (std::abs(m_.at(r, k)) > best) {
          best = std::abs(m_.at(r, k));
          p = r;
        }
      }
      if (best == 0.0) throw std::runtime_error("BandedLU: matrix is singular");
      piv_[k] = p;
      const std::size_t c1 = std::min(n - 1, k + span_u);
      if (p != k) {
        for (std::size_t c = k; c <= c1; ++c) std::swap(m_.at(k, c), m_.at(p, c));
      }
      const double inv = 1.0 / m_.at(k, k);
      for (std::size_t r = k + 1; r <= r1; ++r) {
        const double l = m_.at(r, k) * inv;
        m_.at(r, k) = l;
        if (l == 0.0) continue;
        for (std::size_t c = k + 1; c <= c1; ++c) m_.at(r, c) -= l * m_.at(k, c);
      }
    }
  }

  BandedMatrix m_;
  std::vector<std::size_t> piv_;
};

}  // namespace lsabr
