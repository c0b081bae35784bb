#pragma once

// Small dense symmetric matrices with an LL^T factorization. Dimensions in
// this library stay modest (conditionals on short windows, test oracles), so
// a plain O(n^3) Cholesky is all that is needed.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "btvc/errors.hpp"

namespace btvc {

class DenseSymMatrix {
 public:
  explicit DenseSymMatrix(std::size_t n) : n_(n), a_(n * n, 0.0) {
    if (n == 0) throw ParameterError("DenseSymMatrix: n must be positive");
  }

  std::size_t size() const noexcept { return n_; }
  double& at(std::size_t i, std::size_t j) { return a_[i * n_ + j]; }
  double at(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }

  void set_sym(std::size_t i, std::size_t j, double v) {
    a_[i * n_ + j] = v;
    a_[j * n_ + i] = v;
  }

 private:
  std::size_t n_;
  std::vector<double> a_;
};

/// A = L L^T; throws NumericError naming the failing pivot when A is not SPD.
class DenseCholesky {
 public:
  explicit DenseCholesky(const DenseSymMatrix& a) : n_(a.size()), l_(n_ * n_) {
    for (std::size_t j = 0; j < n_; ++j) {
      double d = a.at(j, j);
      for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
      if (!(d > 0.0) || !std::isfinite(d)) {
        throw NumericError("dense Cholesky: non-positive pivot at index " +
                           std::to_string(j));
      }
      l(j, j) = std::sqrt(d);
      for (std::size_t i = j + 1; i < n_; ++i) {
        double s = a.at(i, j);
        for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
        l(i, j) = s / l(j, j);
      }
    }
  }

  std::size_t size() const noexcept { return n_; }

  /// log det(A) = 2 sum log L_ii.
  double log_det() const {
    double s = 0.0;
    for (std::size_t i = 0; i < n_; ++i) s += std::log(lc(i, i));
    return 2.0 * s;
  }

  /// Solves A x = b.
  std::vector<double> solve(std::vector<double> b) const {
    for (std::size_t i = 0; i < n_; ++i) {
      double s = b[i];
      for (std::size_t k = 0; k < i; ++k) s -= lc(i, k) * b[k];
      b[i] = s / lc(i, i);
    }
    for (std::size_t ii = n_; ii-- > 0;) {
      double s = b[ii];
      for (std::size_t k = ii + 1; k < n_; ++k) s -= lc(k, ii) * b[k];
      b[ii] = s / lc(ii, ii);
    }
    return b;
  }

  /// x = L z: maps z ~ N(0, I) to x ~ N(0, A).
  std::vector<double> mult_lower(const std::vector<double>& z) const {
    std::vector<double> x(n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
      double s = 0.0;
      for (std::size_t k = 0; k <= i; ++k) s += lc(i, k) * z[k];
      x[i] = s;
    }
    return x;
  }

  /// x = L^{-T} z: maps z ~ N(0, I) to x ~ N(0, A^{-1}).
  std::vector<double> solve_lt(std::vector<double> z) const {
    for (std::size_t ii = n_; ii-- > 0;) {
      double s = z[ii];
      for (std::size_t k = ii + 1; k < n_; ++k) s -= lc(k, ii) * z[k];
      z[ii] = s / lc(ii, ii);
    }
    return z;
  }

 private:
  double& l(std::size_t i, std::size_t j) { return l_[i * n_ + j]; }
  double lc(std::size_t i, std::size_t j) const { return l_[i * n_ + j]; }

  std::size_t n_;
  std::vector<double> l_;
};

}  // namespace btvc
