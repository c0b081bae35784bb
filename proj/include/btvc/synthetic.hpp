#pragma once

// Synthetic data generation: a series from the generative recursion
// (x_t = alpha_t + beta x_{t-1} + eps, latent alpha AR(1)), and a yield
// panel driven by a level factor from that recursion plus a small AR(1)
// slope factor and idiosyncratic noise. These are the inputs for the
// self-recovery tests and the demo workflow.

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "btvc/errors.hpp"
#include "btvc/factors.hpp"
#include "btvc/latent_cov.hpp"
#include "btvc/rng.hpp"

namespace btvc {

struct SeriesGenConfig {
  std::size_t length = 240;
  double rho = 0.98;
  double beta = 0.95;
  double sigma_sq = 1.0;
  double target_variance = 120.0;
  std::optional<double> tau_sq;  // overrides the solved value; 0 gives a linear AR(1)
  std::size_t warmup = 5000;
  double shift = 0.0;  // added to every emitted value

  double resolved_tau_sq() const {
    if (tau_sq) {
      if (*tau_sq < 0.0)
        throw ConstraintError("simulate: tau_sq must be non-negative");
      return *tau_sq;
    }
    return solve_tau_sq(rho, beta, sigma_sq, target_variance);
  }

  void validate() const {
    if (length < 3) throw ParameterError("simulate: length must be >= 3");
    if (!(std::abs(rho) < 1.0) || !(std::abs(beta) < 1.0))
      throw ConstraintError("simulate: |rho| and |beta| must be below 1");
    if (!(sigma_sq > 0.0))
      throw ConstraintError("simulate: sigma_sq must be positive");
    (void)resolved_tau_sq();
  }
};

inline std::vector<double> generate_btvc_series(const SeriesGenConfig& cfg,
                                                Rng& rng) {
  cfg.validate();
  const double tau = std::sqrt(cfg.resolved_tau_sq());
  const double sig = std::sqrt(cfg.sigma_sq);
  double alpha = 0.0;
  double x = 0.0;
  for (std::size_t i = 0; i < cfg.warmup; ++i) {
    alpha = cfg.rho * alpha + tau * rng.standard_normal();
    x = alpha + cfg.beta * x + sig * rng.standard_normal();
  }
  std::vector<double> out(cfg.length);
  for (std::size_t i = 0; i < cfg.length; ++i) {
    alpha = cfg.rho * alpha + tau * rng.standard_normal();
    x = alpha + cfg.beta * x + sig * rng.standard_normal();
    out[i] = x + cfg.shift;
  }
  return out;
}

struct PanelGenConfig {
  SeriesGenConfig level;                      // level-factor dynamics
  double slope_gamma = 0.85;
  double slope_var = 0.25;                    // stationary variance of the slope factor
  double noise_sd = 0.02;                     // idiosyncratic, per cell
  std::vector<double> maturities;             // defaults to 1..20 years
  double curve_base = 1.5;                    // mean curve: base + range(1 - exp(-tau/4))
  double curve_range = 1.5;

  void validate() const {
    level.validate();
    if (!(std::abs(slope_gamma) < 1.0))
      throw ConstraintError("simulate: |slope_gamma| must be below 1");
    if (!(slope_var > 0.0) || !(noise_sd >= 0.0))
      throw ConstraintError("simulate: slope_var must be positive, noise_sd non-negative");
  }
};

/// Level loadings are flat, slope loadings decrease linearly from short to
/// long maturities; both are orthonormalized so PCA recovers them up to sign.
inline YieldPanel generate_yield_panel(const PanelGenConfig& cfg_in, Rng& rng) {
  PanelGenConfig cfg = cfg_in;
  if (cfg.maturities.empty()) {
    for (int m = 1; m <= 20; ++m) cfg.maturities.push_back(m);
  }
  cfg.validate();
  const std::size_t m_cols = cfg.maturities.size();
  const std::size_t t_rows = cfg.level.length;

  std::vector<double> xi1(m_cols, 1.0 / std::sqrt(static_cast<double>(m_cols)));
  std::vector<double> xi2(m_cols);
  for (std::size_t i = 0; i < m_cols; ++i)
    xi2[i] = static_cast<double>(m_cols - 1) / 2.0 - static_cast<double>(i);
  // orthogonalize against xi1 (already balanced) and normalize
  double dot = 0.0;
  for (std::size_t i = 0; i < m_cols; ++i) dot += xi1[i] * xi2[i];
  double norm = 0.0;
  for (std::size_t i = 0; i < m_cols; ++i) {
    xi2[i] -= dot * xi1[i];
    norm += xi2[i] * xi2[i];
  }
  norm = std::sqrt(norm);
  for (double& v : xi2) v /= norm;

  Rng level_rng = rng.derive("panel-level");
  Rng slope_rng = rng.derive("panel-slope");
  Rng noise_rng = rng.derive("panel-noise");

  const auto level = generate_btvc_series(cfg.level, level_rng);
  std::vector<double> slope(t_rows);
  const double se = std::sqrt(cfg.slope_var * (1.0 - cfg.slope_gamma * cfg.slope_gamma));
  double s = std::sqrt(cfg.slope_var) * slope_rng.standard_normal();
  for (std::size_t i = 0; i < t_rows; ++i) {
    s = cfg.slope_gamma * s + se * slope_rng.standard_normal();
    slope[i] = s;
  }

  YieldPanel p;
  p.maturities = cfg.maturities;
  p.n_rows = t_rows;
  p.n_cols = m_cols;
  p.rates.resize(t_rows * m_cols);
  p.dates.resize(t_rows);
  int year = 1997, month = 9;
  for (std::size_t t = 0; t < t_rows; ++t) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%04d-%02d", year % 10000, month);
    p.dates[t] = buf;
    if (++month > 12) {
      month = 1;
      ++year;
    }
    for (std::size_t m = 0; m < m_cols; ++m) {
      const double mu =
          cfg.curve_base +
          cfg.curve_range * (1.0 - std::exp(-cfg.maturities[m] / 4.0));
      p.rates[t * m_cols + m] = mu + xi1[m] * level[t] + xi2[m] * slope[t] +
                                cfg.noise_sd * noise_rng.standard_normal();
    }
  }
  return p;
}

}  // namespace btvc
