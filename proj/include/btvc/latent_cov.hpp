#pragma once

// Covariance structure of the latent mean-reversion-level process: a
// stationary AR(1) with correlation rho and innovation variance tau^2, held
// canonically as its tridiagonal precision matrix. Also the closed-form link
// between tau^2 and the model's long-run variance target.

#include <cmath>
#include <cstddef>
#include <sstream>
#include <string>

#include "btvc/banded.hpp"
#include "btvc/errors.hpp"

namespace btvc {

struct ArCovParams {
  double rho;
  double tau_sq;

  void validate() const {
    if (!(std::abs(rho) < 1.0) || !std::isfinite(rho))
      throw ParameterError("ArCovParams: |rho| must be below 1");
    if (!(tau_sq > 0.0) || !std::isfinite(tau_sq))
      throw ParameterError("ArCovParams: tau_sq must be positive");
  }

  /// Unconditional variance tau^2 / (1 - rho^2) of the latent process.
  double unconditional_variance() const { return tau_sq / (1.0 - rho * rho); }
};

/// Tridiagonal precision of the length-n stationary AR(1) covariance
/// tau^2 rho^{|i-j|} / (1 - rho^2), plus its log determinant.
struct LatentCovariance {
  std::size_t n = 0;
  SymBandMatrix precision{1, 1};
  double log_det_precision = 0.0;
  ArCovParams params{0.0, 1.0};
};

inline LatentCovariance build_latent_covariance(const ArCovParams& p,
                                                std::size_t n) {
  p.validate();
  if (n < 1) throw ParameterError("build_latent_covariance: n must be >= 1");

  const double rho = p.rho;
  const double inv_tau = 1.0 / p.tau_sq;
  SymBandMatrix q(n, 1);
  if (n == 1) {
    q.band(0, 0) = (1.0 - rho * rho) * inv_tau;
  } else {
    q.band(0, 0) = inv_tau;
    q.band(n - 1, 0) = inv_tau;
    for (std::size_t i = 1; i + 1 < n; ++i)
      q.band(i, 0) = (1.0 + rho * rho) * inv_tau;
    for (std::size_t i = 1; i < n; ++i) q.band(i, 1) = -rho * inv_tau;
  }
  // det(Sigma) = [tau^2/(1-rho^2)] * (tau^2)^{n-1}
  const double log_det_precision =
      std::log1p(-rho * rho) - static_cast<double>(n) * std::log(p.tau_sq);
  return LatentCovariance{n, std::move(q), log_det_precision, p};
}

/// Long-run variance of the model:
///   sigma^2/(1-beta^2) + tau^2 (1+rho beta) / ((1-rho beta)(1-beta^2)(1-rho^2)).
inline double long_run_variance(double rho, double beta, double sigma_sq,
                                double tau_sq) {
  if (!(std::abs(rho) < 1.0) || !(std::abs(beta) < 1.0))
    throw ParameterError("long_run_variance: |rho| and |beta| must be below 1");
  if (!(sigma_sq > 0.0) || !(tau_sq >= 0.0))
    throw ParameterError(
        "long_run_variance: sigma_sq must be positive, tau_sq non-negative");
  return sigma_sq / (1.0 - beta * beta) +
         tau_sq * (1.0 + rho * beta) /
             ((1.0 - rho * beta) * (1.0 - beta * beta) * (1.0 - rho * rho));
}

/// Upper admissibility bound for beta given sigma^2 and the target variance:
/// sqrt((V - sigma^2) / V). Requires sigma^2 < V.
inline double beta_upper_bound(double sigma_sq, double target_var) {
  if (!(sigma_sq > 0.0) || !(target_var > 0.0))
    throw ParameterError("beta_upper_bound: sigma_sq and V must be positive");
  if (!(sigma_sq < target_var))
    throw ConstraintError(
        "beta_upper_bound: sigma_sq must be below the target variance");
  return std::sqrt((target_var - sigma_sq) / target_var);
}

/// Innovation variance of the latent process that makes the long-run
/// variance equal target_var exactly (the constraint is linear in tau^2).
/// Rejects beta within 1e-8 of the admissibility bound, where tau^2
/// underflows and the latent density degenerates.
inline double solve_tau_sq(double rho, double beta, double sigma_sq,
                           double target_var) {
  if (!(std::abs(rho) < 1.0))
    throw ParameterError("solve_tau_sq: |rho| must be below 1");
  if (!(sigma_sq > 0.0) || !(target_var > 0.0))
    throw ParameterError("solve_tau_sq: sigma_sq and V must be positive");
  const double ub = beta_upper_bound(sigma_sq, target_var);
  if (!(std::abs(beta) < ub - 1e-8)) {
    std::ostringstream msg;
    msg << "solve_tau_sq: beta = " << beta
        << " is outside the admissible interval; |beta| must stay below "
        << ub << " (minus a 1e-8 guard) for tau^2 to stay positive";
    throw ConstraintError(msg.str());
  }
  const double one_m_b2 = 1.0 - beta * beta;
  const double tau_sq = (target_var - sigma_sq / one_m_b2) *
                        (1.0 - rho * beta) * one_m_b2 * (1.0 - rho * rho) /
                        (1.0 + rho * beta);
  if (!(tau_sq > 0.0) || !std::isfinite(tau_sq))
    throw ConstraintError("solve_tau_sq: derived tau_sq is not positive");
  return tau_sq;
}

}  // namespace btvc
