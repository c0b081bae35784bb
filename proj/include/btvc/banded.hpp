#pragma once

// Symmetric banded matrices in lower-band storage and a root-free LDL^T
// factorization. Entry (i, j) with 0 <= i - j <= w lives in slot (i, i - j).
// Factorization, solves and whitening transforms all cost O(n * w^2).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "btvc/errors.hpp"

namespace btvc {

class SymBandMatrix {
 public:
  SymBandMatrix(std::size_t n, std::size_t bandwidth)
      : n_(n), w_(bandwidth), data_(n * (bandwidth + 1), 0.0) {
    if (n == 0) throw ParameterError("SymBandMatrix: n must be positive");
  }

  std::size_t size() const noexcept { return n_; }
  std::size_t bandwidth() const noexcept { return w_; }

  /// Band slot access: row i, diagonal offset d = i - j (0 <= d <= w).
  double& band(std::size_t i, std::size_t d) { return data_[i * (w_ + 1) + d]; }
  double band(std::size_t i, std::size_t d) const {
    return data_[i * (w_ + 1) + d];
  }

  /// Full-matrix read; zero outside the band.
  double get(std::size_t i, std::size_t j) const {
    const std::size_t hi = std::max(i, j);
    const std::size_t lo = std::min(i, j);
    if (hi - lo > w_) return 0.0;
    return data_[hi * (w_ + 1) + (hi - lo)];
  }

  /// Writable reference by (row, col); requires the pair to lie in the band.
  double& ref(std::size_t i, std::size_t j) {
    const std::size_t hi = std::max(i, j);
    const std::size_t lo = std::min(i, j);
    if (hi - lo > w_)
      throw ParameterError("SymBandMatrix::ref: entry outside band");
    return data_[hi * (w_ + 1) + (hi - lo)];
  }

 private:
  std::size_t n_;
  std::size_t w_;
  std::vector<double> data_;
};

/// A = L D L^T with unit lower-banded L; throws NumericError naming the
/// failing pivot if A is not positive definite.
class BandedLdlt {
 public:
  explicit BandedLdlt(const SymBandMatrix& a)
      : n_(a.size()), w_(a.bandwidth()), l_(n_ * (w_ + 1), 0.0), d_(n_, 0.0) {
    for (std::size_t j = 0; j < n_; ++j) {
      const std::size_t k0 = (j > w_) ? j - w_ : 0;
      double dj = a.band(j, 0);
      for (std::size_t k = k0; k < j; ++k) {
        const double ljk = lslot(j, j - k);
        dj -= ljk * ljk * d_[k];
      }
      if (!(dj > 0.0) || !std::isfinite(dj)) {
        throw NumericError("banded LDL^T: non-positive pivot at index " +
                           std::to_string(j));
      }
      d_[j] = dj;
      const std::size_t imax = std::min(j + w_, n_ - 1);
      for (std::size_t i = j + 1; i <= imax; ++i) {
        double s = a.get(i, j);
        const std::size_t kk0 = (i > w_) ? i - w_ : 0;
        for (std::size_t k = std::max(kk0, k0); k < j; ++k) {
          s -= lslot(i, i - k) * lslot(j, j - k) * d_[k];
        }
        lslot(i, i - j) = s / dj;
      }
    }
  }

  std::size_t size() const noexcept { return n_; }
  const std::vector<double>& pivots() const noexcept { return d_; }

  /// log det(A) = sum log d_i.
  double log_det() const {
    double s = 0.0;
    for (double v : d_) s += std::log(v);
    return s;
  }

  /// Solves A x = b.
  std::vector<double> solve(std::vector<double> b) const {
    forward_unit_lower(b);
    for (std::size_t i = 0; i < n_; ++i) b[i] /= d_[i];
    backward_unit_upper(b);
    return b;
  }

  /// x = L^{-T} D^{-1/2} z: maps z ~ N(0, I) to x ~ N(0, A^{-1}).
  std::vector<double> unwhiten_precision(std::vector<double> z) const {
    for (std::size_t i = 0; i < n_; ++i) z[i] /= std::sqrt(d_[i]);
    backward_unit_upper(z);
    return z;
  }

  /// x = L D^{1/2} z: maps z ~ N(0, I) to x ~ N(0, A).
  std::vector<double> unwhiten_covariance(std::vector<double> z) const {
    for (std::size_t i = 0; i < n_; ++i) z[i] *= std::sqrt(d_[i]);
    // multiply by unit lower L in place, bottom-up
    for (std::size_t ii = n_; ii-- > 0;) {
      const std::size_t k0 = (ii > w_) ? ii - w_ : 0;
      double s = z[ii];
      for (std::size_t k = k0; k < ii; ++k) s += lslot_c(ii, ii - k) * z[k];
      z[ii] = s;
    }
    return z;
  }

 private:
  double& lslot(std::size_t i, std::size_t d) { return l_[i * (w_ + 1) + d]; }
  double lslot_c(std::size_t i, std::size_t d) const {
    return l_[i * (w_ + 1) + d];
  }

  // y <- L^{-1} y
  void forward_unit_lower(std::vector<double>& y) const {
    for (std::size_t i = 0; i < n_; ++i) {
      const std::size_t k0 = (i > w_) ? i - w_ : 0;
      double s = y[i];
      for (std::size_t k = k0; k < i; ++k) s -= lslot_c(i, i - k) * y[k];
      y[i] = s;
    }
  }

  // y <- L^{-T} y
  void backward_unit_upper(std::vector<double>& y) const {
    for (std::size_t ii = n_; ii-- > 0;) {
      const std::size_t kmax = std::min(ii + w_, n_ - 1);
      double s = y[ii];
      for (std::size_t k = ii + 1; k <= kmax; ++k)
        s -= lslot_c(k, k - ii) * y[k];
      y[ii] = s;
    }
  }

  std::size_t n_;
  std::size_t w_;
  std::vector<double> l_;
  std::vector<double> d_;
};

}  // namespace btvc
