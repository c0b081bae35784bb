#pragma once

// Metropolis-Hastings-within-Gibbs sampler. Each iteration draws the
// extended latent vector alpha~ exactly from its Gaussian full conditional,
// then proposes (rho, sigma^2, beta) from the product of the fixed-tau^2
// conditionals — rho given the current tau^2, sigma^2 given the current
// beta, beta given the current sigma^2 — sets the proposed tau^2 from the
// long-run-variance constraint, and accepts with the usual ratio
// min(1, p(new) q(old|new) / (p(old) q(new|old))) evaluated in log space.
// Proposals that violate sigma^2 < V or the beta bound are rejected
// outright and counted.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "btvc/conditionals.hpp"
#include "btvc/errors.hpp"
#include "btvc/priors.hpp"
#include "btvc/rng.hpp"

namespace btvc {

struct SamplerConfig {
  std::uint64_t iterations = 10000;
  std::uint64_t burn_in = 2000;
  std::uint64_t thinning = 1;
  std::uint64_t seed = 0;
  std::size_t horizon = 480;  // months
  PriorConfig prior;

  void validate() const {
    if (iterations == 0) throw ParameterError("SamplerConfig: iterations must be positive");
    if (burn_in >= iterations)
      throw ParameterError("SamplerConfig: burn_in must be below iterations");
    if (thinning == 0) throw ParameterError("SamplerConfig: thinning must be >= 1");
    prior.validate();
  }
};

struct ChainDiagnostics {
  struct Entry {
    std::string name;
    double ess = 0.0;
    bool ess_defined = false;
    double rhat = 0.0;
  };
  std::vector<Entry> entries;

  const Entry& operator[](const std::string& name) const {
    for (const auto& e : entries)
      if (e.name == name) return e;
    throw ParameterError("ChainDiagnostics: unknown parameter " + name);
  }
};

/// Retained post-burn-in states plus bookkeeping of the MH block.
struct PosteriorDraws {
  std::vector<BtvcState> states;
  double acceptance_rate = 0.0;
  ChainDiagnostics diagnostics;
  std::size_t t = 0;
  std::size_t horizon = 0;
};

/// Effective sample size via Geyer's initial monotone sequence estimator.
/// Undefined (nullopt) for constant chains.
inline std::optional<double> ess_initial_monotone(
    std::span<const double> chain) {
  const std::size_t n = chain.size();
  if (n < 4) throw ParameterError("ess: need at least 4 draws");
  const double mean =
      std::accumulate(chain.begin(), chain.end(), 0.0) / static_cast<double>(n);
  std::vector<double> c(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) c[i] = chain[i] - mean;
  auto gamma = [&](std::size_t k) {
    double s = 0.0;
    for (std::size_t i = 0; i + k < n; ++i) s += c[i] * c[i + k];
    return s / static_cast<double>(n);
  };
  const double g0 = gamma(0);
  if (!(g0 > 0.0)) return std::nullopt;

  // pair sums Gamma_m = gamma_{2m} + gamma_{2m+1}: keep while positive and
  // enforce monotone non-increase
  double asym = -g0;
  double prev_pair = std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; 2 * m + 1 < n; ++m) {
    double pair = gamma(2 * m) + gamma(2 * m + 1);
    if (pair <= 0.0) break;
    pair = std::min(pair, prev_pair);
    prev_pair = pair;
    asym += 2.0 * pair;
  }
  if (!(asym > 0.0)) return std::nullopt;
  return static_cast<double>(n) * g0 / asym;
}

/// Split-chain potential scale reduction: the chain is halved and the two
/// halves treated as separate chains.
inline double split_rhat(std::span<const double> chain) {
  const std::size_t n2 = chain.size() / 2;
  if (n2 < 2) throw ParameterError("split_rhat: need at least 4 draws");
  auto stats = [](std::span<const double> s) {
    const double m = std::accumulate(s.begin(), s.end(), 0.0) /
                     static_cast<double>(s.size());
    double v = 0.0;
    for (double x : s) v += (x - m) * (x - m);
    return std::pair{m, v / static_cast<double>(s.size() - 1)};
  };
  const auto [m1, v1] = stats(chain.subspan(0, n2));
  const auto [m2, v2] = stats(chain.subspan(chain.size() - n2, n2));
  const double w = 0.5 * (v1 + v2);
  if (!(w > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  const double mbar = 0.5 * (m1 + m2);
  const double b_over_n = (m1 - mbar) * (m1 - mbar) + (m2 - mbar) * (m2 - mbar);
  const double nn = static_cast<double>(n2);
  const double var_plus = (nn - 1.0) / nn * w + b_over_n;
  return std::sqrt(var_plus / w);
}

/// Per-parameter diagnostics for the scalar chain components.
inline ChainDiagnostics diagnostics(const PosteriorDraws& draws) {
  if (draws.states.size() < 2)
    throw ParameterError("diagnostics: need at least 2 retained states");
  ChainDiagnostics out;
  const auto add = [&](const std::string& name, auto getter) {
    std::vector<double> series(draws.states.size());
    for (std::size_t i = 0; i < series.size(); ++i)
      series[i] = getter(draws.states[i]);
    ChainDiagnostics::Entry e;
    e.name = name;
    if (series.size() >= 4) {
      const auto ess = ess_initial_monotone(series);
      e.ess_defined = ess.has_value();
      e.ess = ess.value_or(std::numeric_limits<double>::quiet_NaN());
      e.rhat = split_rhat(series);
    } else {
      e.ess_defined = false;
      e.ess = std::numeric_limits<double>::quiet_NaN();
      e.rhat = std::numeric_limits<double>::quiet_NaN();
    }
    out.entries.push_back(std::move(e));
  };
  add("beta", [](const BtvcState& s) { return s.beta; });
  add("sigma_sq", [](const BtvcState& s) { return s.sigma_sq; });
  add("rho", [](const BtvcState& s) { return s.rho; });
  add("tau_sq", [](const BtvcState& s) { return s.tau_sq; });
  return out;
}

namespace detail {

inline std::span<const double> observed_alpha(const BtvcState& s,
                                              std::size_t t) {
  return std::span<const double>(s.alpha_tilde.data(), t);
}

}  // namespace detail

/// Log acceptance ratio of the (rho, beta, sigma^2) block:
/// log p(new) + log q(old | new) - log p(old) - log q(new | old).
/// Identically zero when the proposal equals the current state.
inline double mh_log_acceptance(const BtvcData& data, const BtvcState& cur,
                                const BtvcState& prop,
                                const PriorConfig& prior) {
  const std::size_t t = data.t();
  const auto alpha = detail::observed_alpha(cur, t);
  const double V = prior.target_variance;
  const double sb2 = prior.sigma_beta * prior.sigma_beta;

  const double lp_new = log_target(prop, data, prior);
  if (lp_new == -kInf) return -kInf;
  const double lp_old = log_target(cur, data, prior);

  // forward: conditionals anchored at the current block
  const auto q_rho_f = rho_conditional(alpha, cur.tau_sq, prior.rho_prior());
  const auto q_sig_f = sigma_sq_conditional(data, alpha, cur.beta,
                                            prior.sigma_sq_prior(),
                                            prior.mu_beta, sb2);
  const auto q_beta_f = beta_conditional(data, alpha, cur.sigma_sq,
                                         prior.mu_beta, sb2, V);
  const double lq_fwd = logpdf_trunc_normal(q_rho_f, prop.rho) +
                        logpdf_inv_gamma(q_sig_f, prop.sigma_sq) +
                        logpdf_trunc_normal(q_beta_f, prop.beta);

  // reverse: conditionals anchored at the proposed block
  const auto q_rho_r = rho_conditional(alpha, prop.tau_sq, prior.rho_prior());
  const auto q_sig_r = sigma_sq_conditional(data, alpha, prop.beta,
                                            prior.sigma_sq_prior(),
                                            prior.mu_beta, sb2);
  const auto q_beta_r = beta_conditional(data, alpha, prop.sigma_sq,
                                         prior.mu_beta, sb2, V);
  const double lq_rev = logpdf_trunc_normal(q_rho_r, cur.rho) +
                        logpdf_inv_gamma(q_sig_r, cur.sigma_sq) +
                        logpdf_trunc_normal(q_beta_r, cur.beta);

  return lp_new + lq_rev - lp_old - lq_fwd;
}

/// Draw a candidate (rho, sigma^2, beta) block from the fixed-tau^2
/// conditionals and solve for its tau^2. Returns nullopt when the candidate
/// violates an admissibility constraint (rejected outright by the caller).
inline std::optional<BtvcState> propose_block(const BtvcData& data,
                                              const BtvcState& cur,
                                              const PriorConfig& prior,
                                              Rng& rng) {
  const std::size_t t = data.t();
  const auto alpha = detail::observed_alpha(cur, t);
  const double V = prior.target_variance;
  const double sb2 = prior.sigma_beta * prior.sigma_beta;

  BtvcState prop = cur;
  prop.rho = sample_trunc_normal(
      rho_conditional(alpha, cur.tau_sq, prior.rho_prior()), rng);
  prop.sigma_sq = sample_inv_gamma(
      sigma_sq_conditional(data, alpha, cur.beta, prior.sigma_sq_prior(),
                           prior.mu_beta, sb2),
      rng);
  prop.beta = sample_trunc_normal(
      beta_conditional(data, alpha, cur.sigma_sq, prior.mu_beta, sb2, V),
      rng);

  if (!(prop.sigma_sq < V)) return std::nullopt;
  try {
    prop.tau_sq = solve_tau_sq(prop.rho, prop.beta, prop.sigma_sq, V);
  } catch (const ConstraintError&) {
    return std::nullopt;
  }
  return prop;
}

namespace detail {

inline void check_state(const BtvcState& s, const PriorConfig& prior,
                        std::uint64_t iter) {
  const bool finite = std::isfinite(s.beta) && std::isfinite(s.sigma_sq) &&
                      std::isfinite(s.rho) && std::isfinite(s.tau_sq);
  bool alpha_finite = true;
  for (double a : s.alpha_tilde) alpha_finite = alpha_finite && std::isfinite(a);
  const double tau_ref =
      solve_tau_sq(s.rho, s.beta, s.sigma_sq, prior.target_variance);
  const bool consistent =
      std::abs(s.tau_sq - tau_ref) <= 1e-9 * std::max(1.0, tau_ref);
  if (!finite || !alpha_finite || !consistent ||
      !(std::abs(s.rho) < 1.0) || !(s.sigma_sq > 0.0) ||
      !(s.sigma_sq < prior.target_variance)) {
    throw NumericError("chain state invariant violated at iteration " +
                       std::to_string(iter));
  }
}

inline std::string dump_state(const BtvcState& s) {
  std::ostringstream os;
  os << "beta=" << s.beta << " sigma_sq=" << s.sigma_sq << " rho=" << s.rho
     << " tau_sq=" << s.tau_sq;
  return os.str();
}

// Starting point: sigma^2 from the no-intercept OLS residual variance
// clamped below V, rho at the prior mean, alpha~ at zero. A raw OLS slope
// sits essentially at the admissibility bound for near-integrated samples,
// which starts tau^2 degenerate and stretches the transient, so beta starts
// at the prior-blended conditional mean given alpha = 0 instead.
inline BtvcState initial_state(const BtvcData& data, const PriorConfig& prior,
                               std::size_t horizon) {
  const std::size_t t = data.t();
  double num = 0.0, den = 0.0;
  for (std::size_t j = 1; j <= t; ++j) {
    num += data.x[j] * data.x[j - 1];
    den += data.x[j - 1] * data.x[j - 1];
  }
  if (!(den > 0.0))
    throw ParameterError("run_chain: lagged series has zero variance");
  const double slope = num / den;
  double rss = 0.0;
  for (std::size_t j = 1; j <= t; ++j) {
    const double e = data.x[j] - slope * data.x[j - 1];
    rss += e * e;
  }
  double sigma_sq = rss / static_cast<double>(t - 1);
  const double V = prior.target_variance;
  if (!(sigma_sq > 0.0)) sigma_sq = 1e-8;
  if (!(sigma_sq < 0.5 * V)) sigma_sq = 0.5 * V;

  const std::vector<double> alpha_zero(t, 0.0);
  const TruncNormalParams beta_cond = beta_conditional(
      data, alpha_zero, sigma_sq, prior.mu_beta,
      prior.sigma_beta * prior.sigma_beta, V);
  // tau^2 > 0 needs |beta| inside the bound, not just beta < ub
  const double ub = beta_upper_bound(sigma_sq, V);
  const double beta = std::clamp(beta_cond.mean, -ub + 1e-3, ub - 1e-3);

  BtvcState s;
  s.beta = beta;
  s.sigma_sq = sigma_sq;
  s.rho = std::clamp(prior.mu_rho, -1.0 + 1e-6, 1.0 - 1e-6);
  s.tau_sq = solve_tau_sq(s.rho, s.beta, s.sigma_sq, V);
  s.alpha_tilde.assign(t + horizon, 0.0);
  return s;
}

}  // namespace detail

inline PosteriorDraws run_chain(const BtvcData& data,
                                const SamplerConfig& cfg) {
  data.validate();
  cfg.validate();
  const std::size_t t = data.t();
  const std::size_t n = t + cfg.horizon;
  Rng rng(cfg.seed);

  BtvcState cur = detail::initial_state(data, cfg.prior, cfg.horizon);

  PosteriorDraws out;
  out.t = t;
  out.horizon = cfg.horizon;
  out.states.reserve((cfg.iterations - cfg.burn_in) / cfg.thinning + 1);

  std::uint64_t accepted = 0;
  std::uint64_t consecutive_inadmissible = 0;

  for (std::uint64_t iter = 0; iter < cfg.iterations; ++iter) {
    // Gibbs step: exact draw of alpha~, always accepted
    const auto cov =
        build_latent_covariance(ArCovParams{cur.rho, cur.tau_sq}, n);
    auto post = alpha_full_conditional(data, cur.beta, cur.sigma_sq, cov);
    cur.alpha_tilde =
        sample_mv_normal(MvNormalSpec{std::move(post.mean),
                                      MatrixTag::Precision,
                                      std::move(post.precision)},
                         rng);

    // MH step over (rho, sigma^2, beta) with tau^2 tied to the constraint
    const auto prop = propose_block(data, cur, cfg.prior, rng);
    if (!prop) {
      if (++consecutive_inadmissible > 10000) {
        throw DivergenceError(
            "run_chain: no admissible proposal for 10000 consecutive "
            "iterations; last state: " +
            detail::dump_state(cur));
      }
    } else {
      consecutive_inadmissible = 0;
      const double log_acc = mh_log_acceptance(data, cur, *prop, cfg.prior);
      if (std::log(rng.uniform()) < log_acc) {
        cur.beta = prop->beta;
        cur.sigma_sq = prop->sigma_sq;
        cur.rho = prop->rho;
        cur.tau_sq = prop->tau_sq;
        ++accepted;
        // refresh the forecast tail under the accepted (rho, tau^2): given
        // alpha_t the tail is the prior recursion, keeping the stored state
        // an exact joint sample
        const double tau = std::sqrt(cur.tau_sq);
        for (std::size_t j = t; j < n; ++j) {
          cur.alpha_tilde[j] = cur.rho * cur.alpha_tilde[j - 1] +
                               tau * rng.standard_normal();
        }
      }
    }

    detail::check_state(cur, cfg.prior, iter);
    if (iter >= cfg.burn_in && (iter - cfg.burn_in) % cfg.thinning == 0)
      out.states.push_back(cur);
  }

  out.acceptance_rate =
      static_cast<double>(accepted) / static_cast<double>(cfg.iterations);
  if (out.states.size() >= 2) out.diagnostics = diagnostics(out);
  return out;
}

}  // namespace btvc
