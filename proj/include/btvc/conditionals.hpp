#pragma once

// Full and partial conditional distributions of the model parameters, and
// the joint log target density used by the Metropolis-Hastings correction.
//
// Data convention: x = (x_0, ..., x_t), with x_0 conditioned on as fixed.
// The likelihood pairs alpha_{j} with Delta_{j-1} = x_j - beta x_{j-1} for
// j = 1..t, so the alpha vector index k (0-based) holds alpha_{k+1}.

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "btvc/distributions.hpp"
#include "btvc/errors.hpp"
#include "btvc/latent_cov.hpp"
#include "btvc/priors.hpp"

namespace btvc {

/// Ordered observations of the modeled factor at uniform monthly spacing.
struct BtvcData {
  std::vector<double> x;

  std::size_t t() const { return x.size() - 1; }

  void validate() const {
    if (x.size() < 3)
      throw ParameterError("BtvcData: need at least 3 observations");
    for (double v : x)
      if (!std::isfinite(v))
        throw ParameterError("BtvcData: observations must be finite");
  }
};

/// One joint state of the Markov chain. alpha_tilde has length t + h and its
/// tail covers the forecast horizon; tau_sq is the deterministic function of
/// (rho, beta, sigma_sq) under the configured long-run variance target.
struct BtvcState {
  std::vector<double> alpha_tilde;
  double beta = 0.0;
  double sigma_sq = 1.0;
  double rho = 0.0;
  double tau_sq = 1.0;
};

/// Gaussian full conditional of alpha_tilde: tridiagonal posterior precision
/// Sigma~^{-1} + sigma^{-2} diag(I_t, 0) and its mean.
struct AlphaPosterior {
  std::vector<double> mean;
  SymBandMatrix precision{1, 1};
};

/// Delta vector of length t + h: entry j = x_{j+1} - beta x_j for j < t,
/// zero over the forecast horizon.
inline std::vector<double> delta_vector(const BtvcData& data, double beta,
                                        std::size_t horizon) {
  data.validate();
  const std::size_t t = data.t();
  std::vector<double> d(t + horizon, 0.0);
  for (std::size_t j = 0; j < t; ++j) d[j] = data.x[j + 1] - beta * data.x[j];
  return d;
}

inline AlphaPosterior alpha_full_conditional(const BtvcData& data, double beta,
                                             double sigma_sq,
                                             const LatentCovariance& cov) {
  data.validate();
  const std::size_t t = data.t();
  if (cov.n < t)
    throw ParameterError("alpha_full_conditional: covariance shorter than data");
  if (!(sigma_sq > 0.0))
    throw ParameterError("alpha_full_conditional: sigma_sq must be positive");

  SymBandMatrix prec = cov.precision;
  const double inv_s2 = 1.0 / sigma_sq;
  for (std::size_t i = 0; i < t; ++i) prec.band(i, 0) += inv_s2;

  std::vector<double> rhs = delta_vector(data, beta, cov.n - t);
  for (double& v : rhs) v *= inv_s2;

  BandedLdlt ldlt(prec);
  return AlphaPosterior{ldlt.solve(std::move(rhs)), std::move(prec)};
}

/// Conditional of rho given the observed part of alpha and tau^2; the prior
/// truncation transfers to the posterior.
inline TruncNormalParams rho_conditional(std::span<const double> alpha,
                                         double tau_sq,
                                         const TruncNormalParams& prior) {
  if (alpha.size() < 2)
    throw ParameterError("rho_conditional: need at least 2 alpha values");
  if (!(tau_sq > 0.0))
    throw ParameterError("rho_conditional: tau_sq must be positive");
  prior.validate();

  double chi = 0.0;  // sum alpha_{k-1}^2
  double eta = 0.0;  // sum alpha_k alpha_{k-1}
  for (std::size_t k = 1; k < alpha.size(); ++k) {
    chi += alpha[k - 1] * alpha[k - 1];
    eta += alpha[k] * alpha[k - 1];
  }
  const double var = 1.0 / (chi / tau_sq + 1.0 / prior.variance);
  const double mean = (eta / tau_sq + prior.mean / prior.variance) * var;
  return TruncNormalParams{mean, var, prior.lower, prior.upper};
}

/// Conditional of beta given data, the observed alpha block and sigma^2.
/// Prior is N(mu_beta, sigma^2 sigma_beta^2); the truncation is (-1, ub)
/// with ub = sqrt((V - sigma^2)/V).
inline TruncNormalParams beta_conditional(const BtvcData& data,
                                          std::span<const double> alpha,
                                          double sigma_sq, double mu_beta,
                                          double sigma_beta_sq,
                                          double target_var) {
  data.validate();
  const std::size_t t = data.t();
  if (alpha.size() < t)
    throw ParameterError("beta_conditional: alpha shorter than data");
  if (!(sigma_sq > 0.0) || !(sigma_beta_sq > 0.0))
    throw ParameterError("beta_conditional: variances must be positive");
  const double ub = beta_upper_bound(sigma_sq, target_var);

  double chi = 0.0;  // sum x_{j-1}^2
  double eta = 0.0;  // sum (x_j - alpha_j) x_{j-1}
  for (std::size_t j = 1; j <= t; ++j) {
    const double lag = data.x[j - 1];
    chi += lag * lag;
    eta += (data.x[j] - alpha[j - 1]) * lag;
  }
  const double prior_var = sigma_sq * sigma_beta_sq;
  const double var = 1.0 / (chi / sigma_sq + 1.0 / prior_var);
  const double mean = (eta / sigma_sq + mu_beta / prior_var) * var;
  return TruncNormalParams{mean, var, -1.0, ub};
}

/// Conditional of sigma^2: IG(a~, b~) with a~ = (t+1)/2 + a and
/// b~ = kappa/2 + b + (beta - mu_beta)^2 / (2 sigma_beta^2), where kappa is
/// the residual sum of squares. The truncation normalizer of the beta prior
/// is omitted; the MH correction absorbs the approximation.
inline InvGammaParams sigma_sq_conditional(const BtvcData& data,
                                           std::span<const double> alpha,
                                           double beta,
                                           const InvGammaParams& prior,
                                           double mu_beta,
                                           double sigma_beta_sq) {
  data.validate();
  prior.validate();
  const std::size_t t = data.t();
  if (alpha.size() < t)
    throw ParameterError("sigma_sq_conditional: alpha shorter than data");

  double kappa = 0.0;
  for (std::size_t j = 1; j <= t; ++j) {
    const double e = data.x[j] - alpha[j - 1] - beta * data.x[j - 1];
    kappa += e * e;
  }
  const double db = beta - mu_beta;
  return InvGammaParams{
      0.5 * static_cast<double>(t + 1) + prior.shape,
      0.5 * kappa + prior.scale + db * db / (2.0 * sigma_beta_sq)};
}

/// Log of the unnormalized joint conditional density
///   p(x | beta, sigma^2, alpha) p(alpha | rho, tau^2) p(rho) p(beta | sigma^2) p(sigma^2),
/// with tau^2 the solved function of (rho, beta, sigma^2) and alpha the
/// observed block alpha_1..alpha_t (the forecast tail is conditionally
/// independent of the data given alpha_t and drops out of this block's
/// conditional). Inadmissible states return -inf as a sentinel rather than
/// throwing, so the sampler can reject them through the ordinary acceptance
/// ratio.
inline double log_target(const BtvcState& state, const BtvcData& data,
                         const PriorConfig& prior) {
  data.validate();
  prior.validate();
  const std::size_t t = data.t();
  if (state.alpha_tilde.size() < t) return -kInf;

  const double V = prior.target_variance;
  if (!(std::abs(state.rho) < 1.0)) return -kInf;
  if (!(state.sigma_sq > 0.0) || !(state.sigma_sq < V)) return -kInf;
  const double ub = beta_upper_bound(state.sigma_sq, V);
  if (!(state.beta > -1.0) || !(std::abs(state.beta) < ub - 1e-8)) return -kInf;
  if (!(state.tau_sq > 0.0)) return -kInf;

  double lp = 0.0;

  // likelihood of the observed block
  for (std::size_t j = 1; j <= t; ++j) {
    lp += normal_logpdf(data.x[j],
                        state.alpha_tilde[j - 1] + state.beta * data.x[j - 1],
                        state.sigma_sq);
  }

  // latent prior over the observed alpha block
  const LatentCovariance cov =
      build_latent_covariance(ArCovParams{state.rho, state.tau_sq}, t);
  lp += logpdf_mv_normal(
      MvNormalSpec{std::vector<double>(t, 0.0), MatrixTag::Precision,
                   cov.precision},
      std::vector<double>(state.alpha_tilde.begin(),
                          state.alpha_tilde.begin() + t));

  // parameter priors, each exactly once
  lp += logpdf_trunc_normal(prior.rho_prior(), state.rho);
  lp += logpdf_trunc_normal(
      TruncNormalParams{prior.mu_beta,
                        state.sigma_sq * prior.sigma_beta * prior.sigma_beta,
                        -1.0, ub},
      state.beta);
  lp += logpdf_inv_gamma(prior.sigma_sq_prior(), state.sigma_sq);
  return lp;
}

}  // namespace btvc
