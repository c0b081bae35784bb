#pragma once

// Yield-panel handling: PCA extraction of level/slope factors, the OLS AR(1)
// baselines, curve reconstruction from factor values, and the dynamic
// Nelson-Siegel style per-factor forecasts.
//
// PCA is covariance PCA on the centered, unscaled panel. Loading signs are
// fixed by requiring a non-negative entry at the longest maturity, which
// makes golden files reproducible.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <istream>
#include <numeric>
#include <string>
#include <vector>

#include "btvc/csv.hpp"
#include "btvc/errors.hpp"

namespace btvc {

/// Monthly panel of rates (percentage points) across maturities (years).
struct YieldPanel {
  std::vector<std::string> dates;      // ISO-8601, month precision
  std::vector<double> maturities;      // strictly increasing, years
  std::vector<double> rates;           // row-major T x M
  std::size_t n_rows = 0;
  std::size_t n_cols = 0;

  double at(std::size_t t, std::size_t m) const { return rates[t * n_cols + m]; }

  void validate() const {
    if (n_rows < 24)
      throw ParameterError("YieldPanel: need at least 24 monthly rows");
    if (dates.size() != n_rows || rates.size() != n_rows * n_cols)
      throw ParameterError("YieldPanel: inconsistent dimensions");
    for (std::size_t i = 1; i < maturities.size(); ++i)
      if (!(maturities[i] > maturities[i - 1]))
        throw ParameterError("YieldPanel: maturities must be strictly increasing");
    for (double r : rates)
      if (!std::isfinite(r))
        throw ParameterError("YieldPanel: rates must be finite (no missing cells)");
  }

  /// Index of a maturity column; ParameterError when absent.
  std::size_t maturity_index(double maturity) const {
    for (std::size_t i = 0; i < maturities.size(); ++i)
      if (std::abs(maturities[i] - maturity) < 1e-9) return i;
    throw ParameterError("YieldPanel: maturity " + std::to_string(maturity) +
                         " not present in the panel");
  }

  /// Rows [0, rows) as a shallower panel (expanding-window training slice).
  YieldPanel head(std::size_t rows) const {
    YieldPanel p;
    p.dates.assign(dates.begin(), dates.begin() + rows);
    p.maturities = maturities;
    p.rates.assign(rates.begin(), rates.begin() + rows * n_cols);
    p.n_rows = rows;
    p.n_cols = n_cols;
    return p;
  }
};

/// Panel CSV: header `date,m1,m2,...` with the number after `m` the maturity
/// in years; dates ISO-8601 month precision; rates in percentage points.
inline YieldPanel read_yield_panel(std::istream& is, const std::string& what) {
  const auto table = csv::read_table(is, what);
  if (table.header.size() < 2 || table.header[0] != "date")
    throw SchemaError(what + ": header must start with 'date' followed by maturity columns");
  YieldPanel p;
  p.n_cols = table.header.size() - 1;
  for (std::size_t i = 1; i < table.header.size(); ++i) {
    const auto& h = table.header[i];
    if (h.size() < 2 || h[0] != 'm')
      throw SchemaError(what + ": maturity column '" + h + "' must look like m<years>");
    p.maturities.push_back(csv::parse_double(h.substr(1), 1));
  }
  p.n_rows = table.rows.size();
  p.rates.reserve(p.n_rows * p.n_cols);
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    p.dates.push_back(table.rows[r][0]);
    for (std::size_t c = 1; c < table.rows[r].size(); ++c)
      p.rates.push_back(csv::parse_double(table.rows[r][c], table.line_numbers[r]));
  }
  p.validate();
  return p;
}

struct PcaDecomposition {
  std::vector<double> mean_curve;      // length M
  std::vector<double> loadings;        // row-major M x K, orthonormal columns
  std::vector<double> scores;          // row-major T x K
  std::vector<double> explained;       // K variance ratios, non-increasing
  std::size_t n_maturities = 0;
  std::size_t n_components = 0;
  std::size_t n_rows = 0;
  bool rank_deficient = false;

  double loading(std::size_t m, std::size_t k) const {
    return loadings[m * n_components + k];
  }
  double score(std::size_t t, std::size_t k) const {
    return scores[t * n_components + k];
  }
  std::vector<double> score_column(std::size_t k) const {
    std::vector<double> col(n_rows);
    for (std::size_t t = 0; t < n_rows; ++t) col[t] = score(t, k);
    return col;
  }
};

inline PcaDecomposition pca(const YieldPanel& panel, std::size_t k) {
  panel.validate();
  const std::size_t t_rows = panel.n_rows;
  const std::size_t m_cols = panel.n_cols;
  if (k < 1 || k > std::min(t_rows - 1, m_cols))
    throw ParameterError("pca: K must satisfy 1 <= K <= min(T-1, M)");

  Eigen::MatrixXd x(t_rows, m_cols);
  for (std::size_t i = 0; i < t_rows; ++i)
    for (std::size_t j = 0; j < m_cols; ++j) x(i, j) = panel.at(i, j);
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const Eigen::MatrixXd centered = x.rowwise() - mean;
  const Eigen::MatrixXd cov =
      centered.transpose() * centered / static_cast<double>(t_rows - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success)
    throw NumericError("pca: eigendecomposition failed");

  // eigenvalues ascending from Eigen; take the top K descending
  const Eigen::VectorXd values = eig.eigenvalues();
  const Eigen::MatrixXd vectors = eig.eigenvectors();
  const double total = std::max(values.sum(), 0.0);

  PcaDecomposition out;
  out.n_maturities = m_cols;
  out.n_components = k;
  out.n_rows = t_rows;
  out.mean_curve.assign(mean.data(), mean.data() + m_cols);
  out.loadings.resize(m_cols * k);
  out.explained.resize(k);

  Eigen::MatrixXd load(m_cols, k);
  for (std::size_t c = 0; c < k; ++c) {
    const auto idx = static_cast<Eigen::Index>(m_cols - 1 - c);
    Eigen::VectorXd v = vectors.col(idx);
    // sign rule: non-negative loading at the longest maturity; when that
    // entry vanishes, anchor on the largest-magnitude entry instead
    double anchor = v(static_cast<Eigen::Index>(m_cols - 1));
    if (std::abs(anchor) < 1e-12) {
      Eigen::Index imax = 0;
      v.cwiseAbs().maxCoeff(&imax);
      anchor = v(imax);
    }
    if (anchor < 0.0) v = -v;
    load.col(static_cast<Eigen::Index>(c)) = v;
    const double lambda = std::max(values(idx), 0.0);
    out.explained[c] = total > 0.0 ? lambda / total : 0.0;
    if (lambda <= 1e-12 * std::max(1.0, values(m_cols - 1)))
      out.rank_deficient = true;
  }
  const Eigen::MatrixXd scores = centered * load;
  for (std::size_t i = 0; i < m_cols; ++i)
    for (std::size_t c = 0; c < k; ++c)
      out.loadings[i * k + c] = load(static_cast<Eigen::Index>(i),
                                     static_cast<Eigen::Index>(c));
  out.scores.resize(t_rows * k);
  for (std::size_t i = 0; i < t_rows; ++i)
    for (std::size_t c = 0; c < k; ++c)
      out.scores[i * k + c] = scores(static_cast<Eigen::Index>(i),
                                     static_cast<Eigen::Index>(c));
  return out;
}

/// Scores of an arbitrary panel against fixed loadings/mean (used when the
/// backtest keeps initial-window loadings).
inline std::vector<double> project_scores(const YieldPanel& panel,
                                          const PcaDecomposition& pca_dec,
                                          std::size_t component) {
  std::vector<double> out(panel.n_rows, 0.0);
  for (std::size_t t = 0; t < panel.n_rows; ++t) {
    double s = 0.0;
    for (std::size_t m = 0; m < panel.n_cols; ++m)
      s += (panel.at(t, m) - pca_dec.mean_curve[m]) *
           pca_dec.loading(m, component);
    out[t] = s;
  }
  return out;
}

/// OLS AR(1) fit s_t = c + gamma s_{t-1} + eta. With the flag set the
/// constant is fixed at zero. Residual variance is RSS / (n - p).
struct Ar1Fit {
  double c = 0.0;
  double gamma = 0.0;       // reported as estimated, not clamped
  double resid_var = 0.0;
};

inline Ar1Fit fit_ols_ar1(const std::vector<double>& series,
                          bool fix_constant_zero) {
  if (series.size() < 3)
    throw ParameterError("fit_ols_ar1: need at least 3 observations");
  const std::size_t n = series.size() - 1;
  Ar1Fit fit;
  if (fix_constant_zero) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
      num += series[i] * series[i - 1];
      den += series[i - 1] * series[i - 1];
    }
    if (!(den > 0.0))
      throw ParameterError("fit_ols_ar1: zero-variance regressor");
    fit.gamma = num / den;
    double rss = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
      const double e = series[i] - fit.gamma * series[i - 1];
      rss += e * e;
    }
    fit.resid_var = rss / static_cast<double>(n - 1);
  } else {
    if (n < 3)
      throw ParameterError("fit_ols_ar1: intercept fit needs at least 4 observations");
    double sy = 0.0, sz = 0.0, szz = 0.0, szy = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
      sy += series[i];
      sz += series[i - 1];
      szz += series[i - 1] * series[i - 1];
      szy += series[i - 1] * series[i];
    }
    const double den = static_cast<double>(n) * szz - sz * sz;
    if (!(den > 1e-12 * static_cast<double>(n) * szz))
      throw ParameterError("fit_ols_ar1: zero-variance regressor");
    fit.gamma = (static_cast<double>(n) * szy - sz * sy) / den;
    fit.c = (sy - fit.gamma * sz) / static_cast<double>(n);
    double rss = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
      const double e = series[i] - fit.c - fit.gamma * series[i - 1];
      rss += e * e;
    }
    fit.resid_var = rss / static_cast<double>(n - 2);
  }
  return fit;
}

/// Iterated AR(1) mean forecast: c (1 - gamma^h)/(1 - gamma) + gamma^h x_t.
inline double ar1_mean_forecast(const Ar1Fit& fit, double last, std::size_t h) {
  if (h == 0) return last;
  const double gh = std::pow(fit.gamma, static_cast<double>(h));
  if (std::abs(1.0 - fit.gamma) < 1e-14)
    return fit.c * static_cast<double>(h) + last;
  return fit.c * (1.0 - gh) / (1.0 - fit.gamma) + gh * last;
}

/// r(tau) = mu(tau) + xi_1(tau) level + xi_2(tau) slope, per maturity.
inline std::vector<double> reconstruct_curve(const PcaDecomposition& p,
                                             double level, double slope) {
  if (p.n_components < 2)
    throw ParameterError("reconstruct_curve: need at least two components");
  std::vector<double> curve(p.n_maturities);
  for (std::size_t m = 0; m < p.n_maturities; ++m)
    curve[m] = p.mean_curve[m] + p.loading(m, 0) * level +
               p.loading(m, 1) * slope;
  return curve;
}

/// Per-factor AR(1)-with-intercept mean forecasts (the Diebold-Li PCA
/// variant restricted to the first K components). Row = horizon, col = factor.
inline std::vector<std::vector<double>> forecast_dns(
    const PcaDecomposition& p, const std::vector<std::size_t>& horizons) {
  std::vector<std::vector<double>> out(horizons.size(),
                                       std::vector<double>(p.n_components));
  for (std::size_t k = 0; k < p.n_components; ++k) {
    const auto series = p.score_column(k);
    const Ar1Fit fit = fit_ols_ar1(series, false);
    for (std::size_t hi = 0; hi < horizons.size(); ++hi)
      out[hi][k] = ar1_mean_forecast(fit, series.back(), horizons[hi]);
  }
  return out;
}

}  // namespace btvc
