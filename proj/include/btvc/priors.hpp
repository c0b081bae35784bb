#pragma once

// Prior hyperparameters. Defaults are the interest-rate application values:
// beta | sigma^2 ~ N(0.95, sigma^2 * 0.015^2) truncated, sigma^2 ~ IG(0.5, 2),
// rho ~ N(0.98, 0.001^2) truncated to (-1, 1), long-run variance target 120.

#include <cmath>

#include "btvc/distributions.hpp"
#include "btvc/errors.hpp"

namespace btvc {

struct PriorConfig {
  double mu_beta = 0.95;
  double sigma_beta = 0.015;  // multiplicative: prior sd of beta is sigma*sigma_beta
  double mu_rho = 0.98;
  double sigma_rho = 0.001;
  double shape_a = 0.5;
  double scale_b = 2.0;
  double target_variance = 120.0;  // V, in squared units of the modeled factor
  double long_run_mean = 0.0;      // data are centered by this before modeling

  void validate() const {
    if (!(sigma_beta > 0.0) || !(sigma_rho > 0.0))
      throw ParameterError("PriorConfig: sigma_beta and sigma_rho must be positive");
    if (!(shape_a > 0.0) || !(scale_b > 0.0))
      throw ParameterError("PriorConfig: inverse-gamma shape and scale must be positive");
    if (!(target_variance > 0.0))
      throw ParameterError("PriorConfig: target_variance must be positive");
    if (!std::isfinite(mu_beta) || !std::isfinite(mu_rho) ||
        !std::isfinite(long_run_mean))
      throw ParameterError("PriorConfig: hyperparameters must be finite");
  }

  TruncNormalParams rho_prior() const {
    return TruncNormalParams{mu_rho, sigma_rho * sigma_rho, -1.0, 1.0};
  }

  InvGammaParams sigma_sq_prior() const {
    return InvGammaParams{shape_a, scale_b};
  }
};

}  // namespace btvc
