#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "btvc/conditionals.hpp"
#include "btvc/rng.hpp"
#include "oracles.hpp"

using namespace btvc;

namespace {

// dense route for the alpha posterior: (Sigma~^{-1} + D/sigma^2)^{-1}
struct DenseAlphaPosterior {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

DenseAlphaPosterior dense_alpha_posterior(const BtvcData& data, double beta,
                                          double sigma_sq, double rho,
                                          double tau_sq, int h) {
  const int t = static_cast<int>(data.t());
  const int n = t + h;
  const Eigen::MatrixXd prior_cov = oracles::dense_ar1_covariance(rho, tau_sq, n);
  Eigen::MatrixXd prec = prior_cov.inverse();
  for (int i = 0; i < t; ++i) prec(i, i) += 1.0 / sigma_sq;
  const Eigen::MatrixXd cov = prec.inverse();
  Eigen::VectorXd delta = Eigen::VectorXd::Zero(n);
  for (int j = 0; j < t; ++j) delta(j) = data.x[j + 1] - beta * data.x[j];
  return {cov * delta / sigma_sq, cov};
}

// covariance of the banded posterior, column by column
Eigen::MatrixXd banded_posterior_cov(const AlphaPosterior& post) {
  const std::size_t n = post.mean.size();
  BandedLdlt f(post.precision);
  Eigen::MatrixXd cov(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<double> e(n, 0.0);
    e[j] = 1.0;
    const auto col = f.solve(e);
    for (std::size_t i = 0; i < n; ++i) cov(i, j) = col[i];
  }
  return cov;
}

// truncated-normal log density with the mass from quadrature (oracle route)
double oracle_trunc_logpdf(double x, double mean, double var, double lo,
                           double hi) {
  const double glo = std::max(lo, mean - 12.0 * std::sqrt(var));
  const double ghi = std::min(hi, mean + 12.0 * std::sqrt(var));
  const double mass = oracles::trapezoid(
      [&](double z) { return std::exp(normal_logpdf(z, mean, var)); }, glo,
      ghi, 200000);
  return normal_logpdf(x, mean, var) - std::log(mass);
}

// normalized density on a grid from log values (peak-relative comparison)
std::vector<double> normalize_grid(std::vector<double> logs) {
  const double mx = *std::max_element(logs.begin(), logs.end());
  double sum = 0.0;
  for (double& v : logs) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : logs) v /= sum;
  return logs;
}

double grid_deviation(const std::vector<double>& a,
                      const std::vector<double>& b) {
  double peak = 0.0, dev = 0.0;
  for (double v : b) peak = std::max(peak, v);
  for (std::size_t i = 0; i < a.size(); ++i)
    dev = std::max(dev, std::abs(a[i] - b[i]));
  return dev / peak;
}

BtvcData make_series(Rng& rng, std::size_t t) {
  std::vector<double> x(t + 1);
  x[0] = rng.uniform(-1.0, 1.0);
  for (std::size_t i = 1; i <= t; ++i)
    x[i] = 0.8 * x[i - 1] + rng.standard_normal();
  return BtvcData{std::move(x)};
}

}  // namespace

TEST_CASE("delta vector: hand values", "[conditionals]") {
  // beta = 0: shifted data
  BtvcData d{{0.5, 1.5, -2.0}};
  const auto v0 = delta_vector(d, 0.0, 0);
  REQUIRE(v0 == std::vector<double>{1.5, -2.0});

  // constant series with unit beta: all zeros, horizon padded
  BtvcData ones{{1.0, 1.0, 1.0}};
  const auto v1 = delta_vector(ones, 1.0, 2);
  REQUIRE(v1 == std::vector<double>{0.0, 0.0, 0.0, 0.0});

  // x = (0, 1, 3), beta = 0.5, h = 1
  BtvcData d2{{0.0, 1.0, 3.0}};
  const auto v2 = delta_vector(d2, 0.5, 1);
  REQUIRE(v2[0] == Catch::Approx(1.0));
  REQUIRE(v2[1] == Catch::Approx(2.5));
  REQUIRE(v2[2] == 0.0);
}

TEST_CASE("alpha conditional: zero delta gives zero mean", "[conditionals]") {
  BtvcData ones{{1.0, 1.0, 1.0, 1.0}};
  const auto cov = build_latent_covariance(ArCovParams{0.6, 0.5}, 5);
  const auto post = alpha_full_conditional(ones, 1.0, 0.7, cov);
  for (double m : post.mean) REQUIRE(m == Catch::Approx(0.0).margin(1e-14));
}

TEST_CASE("alpha conditional: uninformative data recovers the prior",
          "[conditionals]") {
  Rng rng(51);
  const auto data = make_series(rng, 6);
  const double rho = 0.6, tau_sq = 0.5;
  const auto cov = build_latent_covariance(ArCovParams{rho, tau_sq}, 9);
  const auto post = alpha_full_conditional(data, 0.5, 1e12, cov);
  const auto c = banded_posterior_cov(post);
  const auto prior = oracles::dense_ar1_covariance(rho, tau_sq, 9);
  for (int i = 0; i < 9; ++i) {
    REQUIRE(std::abs(post.mean[i]) < 1e-3);
    REQUIRE(c(i, i) == Catch::Approx(prior(i, i)).epsilon(1e-3));
  }
}

TEST_CASE("alpha conditional matches the dense oracle", "[conditionals]") {
  Rng rng(52);
  for (int rep = 0; rep < 5; ++rep) {
    const auto data = make_series(rng, 4);
    const double beta = rng.uniform(-0.5, 0.9);
    const double sigma_sq = rng.uniform(0.3, 2.0);
    const double rho = rng.uniform(-0.8, 0.8);
    const double tau_sq = rng.uniform(0.2, 1.5);
    const int h = 2;

    const auto cov = build_latent_covariance(ArCovParams{rho, tau_sq},
                                             data.t() + h);
    const auto post = alpha_full_conditional(data, beta, sigma_sq, cov);
    const auto oracle =
        dense_alpha_posterior(data, beta, sigma_sq, rho, tau_sq, h);

    for (std::size_t i = 0; i < post.mean.size(); ++i)
      REQUIRE(post.mean[i] == Catch::Approx(oracle.mean(i)).margin(1e-8));
    const auto c = banded_posterior_cov(post);
    for (int i = 0; i < c.rows(); ++i)
      for (int j = 0; j < c.cols(); ++j)
        REQUIRE(c(i, j) == Catch::Approx(oracle.cov(i, j)).margin(1e-8));
  }
}

TEST_CASE("alpha conditional: prior reversion over the horizon",
          "[conditionals]") {
  Rng rng(53);
  const auto data = make_series(rng, 10);
  const double rho = 0.5, tau_sq = 0.75;  // rho^14 < 1e-4
  const double sigma_alpha_sq = tau_sq / (1.0 - rho * rho);
  const int h = 20;
  const auto cov =
      build_latent_covariance(ArCovParams{rho, tau_sq}, data.t() + h);
  const auto post = alpha_full_conditional(data, 0.7, 1.0, cov);
  const auto c = banded_posterior_cov(post);
  for (int j = 15; j <= h; ++j) {
    const std::size_t idx = data.t() + j - 1;
    REQUIRE(std::abs(post.mean[idx]) < 1e-3 * std::sqrt(sigma_alpha_sq));
    REQUIRE(c(idx, idx) == Catch::Approx(sigma_alpha_sq).epsilon(1e-3));
  }
}

TEST_CASE("one-step conditional mean reproduces the AR(t) decomposition",
          "[conditionals]") {
  Rng rng(54);
  const auto data = make_series(rng, 5);
  const std::size_t t = data.t();
  const double beta = 0.6, sigma_sq = 0.8, rho = 0.7, tau_sq = 0.4;

  const auto cov = build_latent_covariance(ArCovParams{rho, tau_sq}, t + 1);
  const auto post = alpha_full_conditional(data, beta, sigma_sq, cov);
  const double lib_value = post.mean.back() + beta * data.x.back();

  const auto oracle = dense_alpha_posterior(data, beta, sigma_sq, rho, tau_sq, 1);
  const double dense_value = oracle.mean(t) + beta * data.x.back();
  REQUIRE(lib_value == Catch::Approx(dense_value).margin(1e-8));

  // expanded per-lag form; rows of the posterior covariance give s_{t+1,k}
  const auto& s = oracle.cov;
  double expanded = (s(t, t - 1) / sigma_sq + beta) * data.x[t];
  for (std::size_t i = 1; i <= t - 1; ++i) {
    expanded += (s(t, t - i - 1) - beta * s(t, t - i)) / sigma_sq *
                data.x[t - i];
  }
  expanded -= beta * s(t, 0) / sigma_sq * data.x[0];
  REQUIRE(lib_value == Catch::Approx(expanded).margin(1e-8));
}

TEST_CASE("rho conditional: hand value and limits", "[conditionals]") {
  // alpha = (1, 1, 1), tau^2 = 1, prior N(0, 1): var 1/3, mean 2/3
  const std::vector<double> alpha{1.0, 1.0, 1.0};
  const auto post =
      rho_conditional(alpha, 1.0, TruncNormalParams{0.0, 1.0, -1.0, 1.0});
  REQUIRE(post.variance == Catch::Approx(1.0 / 3.0).margin(1e-12));
  REQUIRE(post.mean == Catch::Approx(2.0 / 3.0).margin(1e-12));
  REQUIRE(post.lower == -1.0);
  REQUIRE(post.upper == 1.0);

  // flat prior: posterior mean equals the no-intercept OLS slope
  Rng rng(55);
  std::vector<double> a(40);
  a[0] = 0.3;
  for (std::size_t i = 1; i < a.size(); ++i)
    a[i] = 0.5 * a[i - 1] + 0.3 * rng.standard_normal();
  double num = 0.0, den = 0.0;
  for (std::size_t i = 1; i < a.size(); ++i) {
    num += a[i] * a[i - 1];
    den += a[i - 1] * a[i - 1];
  }
  const auto flat =
      rho_conditional(a, 0.4, TruncNormalParams{0.0, 1e12, -1.0, 1.0});
  REQUIRE(flat.mean == Catch::Approx(num / den).epsilon(1e-6));

  // dogmatic prior pins the posterior mean at the prior mean
  const auto dogmatic =
      rho_conditional(a, 0.4, TruncNormalParams{0.9, 1e-14, -1.0, 1.0});
  REQUIRE(dogmatic.mean == Catch::Approx(0.9).margin(1e-6));

  REQUIRE_THROWS_AS(rho_conditional(std::vector<double>{1.0}, 1.0,
                                    TruncNormalParams{0, 1, -1, 1}),
                    ParameterError);
}

TEST_CASE("beta conditional: OLS limit, dogmatic limit, bound",
          "[conditionals]") {
  Rng rng(56);
  const auto data = make_series(rng, 30);
  const std::size_t t = data.t();
  const std::vector<double> alpha_zero(t, 0.0);

  double num = 0.0, den = 0.0;
  for (std::size_t j = 1; j <= t; ++j) {
    num += data.x[j] * data.x[j - 1];
    den += data.x[j - 1] * data.x[j - 1];
  }
  const auto flat =
      beta_conditional(data, alpha_zero, 1.0, 0.0, 1e14, 120.0);
  REQUIRE(flat.mean == Catch::Approx(num / den).epsilon(1e-6));

  const auto dogmatic =
      beta_conditional(data, alpha_zero, 1.0, 0.95, 1e-16, 120.0);
  REQUIRE(dogmatic.mean == Catch::Approx(0.95).margin(1e-6));

  // V = 120, sigma^2 = 1: upper bound sqrt(119/120)
  REQUIRE(flat.upper == Catch::Approx(0.9958246164).margin(1e-8));
  REQUIRE(flat.lower == -1.0);

  REQUIRE_THROWS_AS(
      beta_conditional(data, alpha_zero, 130.0, 0.95, 2.25e-4, 120.0),
      ConstraintError);
}

TEST_CASE("sigma^2 conditional: hand values and simulation consistency",
          "[conditionals]") {
  // perfect fit with beta at the prior mean: b~ = b, a~ = (t+1)/2 + a
  BtvcData d{{1.0, 0.95, 0.9025}};  // x_j = 0.95 x_{j-1}, alpha = 0
  const std::vector<double> alpha_zero(2, 0.0);
  const auto perfect = sigma_sq_conditional(d, alpha_zero, 0.95,
                                            InvGammaParams{0.5, 2.0}, 0.95,
                                            2.25e-4);
  REQUIRE(perfect.shape == Catch::Approx(2.0).margin(1e-12));
  REQUIRE(perfect.scale == Catch::Approx(2.0).margin(1e-12));

  // t=2 with residuals (1, 1), a=0.5, b=2: a~=2, b~=3
  BtvcData d2{{0.0, 1.0, 2.0}};  // beta=1, alpha=0: residuals 1, 1
  const auto hand = sigma_sq_conditional(d2, alpha_zero, 1.0,
                                         InvGammaParams{0.5, 2.0}, 1.0,
                                         1.0);
  REQUIRE(hand.shape == Catch::Approx(2.0).margin(1e-12));
  REQUIRE(hand.scale == Catch::Approx(3.0).margin(1e-12));

  // long synthetic series with known alpha: posterior mean near truth
  Rng rng(57);
  const double beta = 0.7, sigma_sq = 0.9, rho = 0.6, tau = 0.5;
  const std::size_t t = 5000;
  std::vector<double> alpha(t), x(t + 1);
  double a = 0.0;
  x[0] = 0.0;
  for (std::size_t i = 0; i < t; ++i) {
    a = rho * a + tau * rng.standard_normal();
    alpha[i] = a;
    x[i + 1] = a + beta * x[i] + std::sqrt(sigma_sq) * rng.standard_normal();
  }
  const auto post = sigma_sq_conditional(BtvcData{x}, alpha, beta,
                                         InvGammaParams{0.5, 2.0}, 0.95,
                                         2.25e-4);
  const double post_mean = post.scale / (post.shape - 1.0);
  REQUIRE(post_mean == Catch::Approx(sigma_sq).epsilon(0.10));
}

TEST_CASE("conjugacy: analytic conditionals match grid brute force",
          "[conditionals]") {
  Rng rng(58);
  const int grid_n = 200;
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t t = 3 + static_cast<std::size_t>(rng.uniform(0.0, 5.9));
    const auto data = make_series(rng, t);
    std::vector<double> alpha(t);
    for (auto& v : alpha) v = rng.standard_normal();
    const double sigma_sq = rng.uniform(0.3, 2.0);
    const double tau_sq = rng.uniform(0.2, 1.5);
    const double beta = rng.uniform(-0.5, 0.9);
    const double V = 120.0;
    const double mu_beta = 0.95, sigma_beta_sq = 2.25e-4;
    const double mu_rho = 0.98, sigma_rho_sq = 1e-6;

    // rho block
    {
      const auto analytic = rho_conditional(
          alpha, tau_sq, TruncNormalParams{mu_rho, sigma_rho_sq, -1.0, 1.0});
      std::vector<double> la(grid_n), lb(grid_n);
      for (int g = 0; g < grid_n; ++g) {
        const double r = -1.0 + 2.0 * (g + 0.5) / grid_n;
        la[g] = normal_logpdf(r, analytic.mean, analytic.variance);
        double brute = normal_logpdf(r, mu_rho, sigma_rho_sq);
        for (std::size_t k = 1; k < alpha.size(); ++k)
          brute += normal_logpdf(alpha[k], r * alpha[k - 1], tau_sq);
        lb[g] = brute;
      }
      REQUIRE(grid_deviation(normalize_grid(la), normalize_grid(lb)) < 1e-6);
    }

    // beta block
    {
      const auto analytic = beta_conditional(data, alpha, sigma_sq, mu_beta,
                                             sigma_beta_sq, V);
      const double ub = analytic.upper;
      std::vector<double> la(grid_n), lb(grid_n);
      for (int g = 0; g < grid_n; ++g) {
        const double b = -1.0 + (ub + 1.0) * (g + 0.5) / grid_n;
        la[g] = normal_logpdf(b, analytic.mean, analytic.variance);
        double brute = normal_logpdf(b, mu_beta, sigma_sq * sigma_beta_sq);
        for (std::size_t j = 1; j <= t; ++j)
          brute += normal_logpdf(data.x[j], alpha[j - 1] + b * data.x[j - 1],
                                 sigma_sq);
        lb[g] = brute;
      }
      REQUIRE(grid_deviation(normalize_grid(la), normalize_grid(lb)) < 1e-6);
    }

    // sigma^2 block (brute force includes the sigma-dependent beta prior)
    {
      const auto analytic = sigma_sq_conditional(
          data, alpha, beta, InvGammaParams{0.5, 2.0}, mu_beta, sigma_beta_sq);
      std::vector<double> la(grid_n), lb(grid_n);
      for (int g = 0; g < grid_n; ++g) {
        const double s2 = 0.05 + 4.0 * (g + 0.5) / grid_n;
        la[g] = logpdf_inv_gamma(analytic, s2);
        double brute = logpdf_inv_gamma(InvGammaParams{0.5, 2.0}, s2) +
                       normal_logpdf(beta, mu_beta, s2 * sigma_beta_sq);
        for (std::size_t j = 1; j <= t; ++j)
          brute += normal_logpdf(data.x[j],
                                 alpha[j - 1] + beta * data.x[j - 1], s2);
        lb[g] = brute;
      }
      REQUIRE(grid_deviation(normalize_grid(la), normalize_grid(lb)) < 1e-6);
    }
  }
}

TEST_CASE("zero-variance data falls back to the prior, not an error",
          "[conditionals]") {
  const std::vector<double> alpha_zero(4, 0.0);
  const auto rho_post = rho_conditional(
      alpha_zero, 0.5, TruncNormalParams{0.98, 1e-6, -1.0, 1.0});
  REQUIRE(rho_post.mean == Catch::Approx(0.98));
  REQUIRE(rho_post.variance == Catch::Approx(1e-6));

  BtvcData zeros{std::vector<double>(5, 0.0)};
  const auto beta_post =
      beta_conditional(zeros, alpha_zero, 1.0, 0.95, 2.25e-4, 120.0);
  REQUIRE(beta_post.mean == Catch::Approx(0.95));
  REQUIRE(beta_post.variance == Catch::Approx(2.25e-4));
}

TEST_CASE("log target matches a dense brute-force assembly", "[conditionals]") {
  Rng rng(59);
  PriorConfig prior;  // interest-rate defaults, V = 120
  const auto data = make_series(rng, 3);
  const std::size_t t = data.t();

  BtvcState s;
  s.rho = 0.9;
  s.beta = 0.8;
  s.sigma_sq = 1.2;
  s.tau_sq = solve_tau_sq(s.rho, s.beta, s.sigma_sq, prior.target_variance);
  s.alpha_tilde.resize(t);
  for (auto& v : s.alpha_tilde) v = rng.standard_normal();

  const double lib = log_target(s, data, prior);

  double brute = 0.0;
  for (std::size_t j = 1; j <= t; ++j)
    brute += normal_logpdf(data.x[j],
                           s.alpha_tilde[j - 1] + s.beta * data.x[j - 1],
                           s.sigma_sq);
  Eigen::VectorXd av(t);
  for (std::size_t i = 0; i < t; ++i) av(i) = s.alpha_tilde[i];
  brute += oracles::dense_mvn_logpdf(
      Eigen::VectorXd::Zero(t),
      oracles::dense_ar1_covariance(s.rho, s.tau_sq, static_cast<int>(t)), av);
  brute += oracle_trunc_logpdf(s.rho, prior.mu_rho,
                               prior.sigma_rho * prior.sigma_rho, -1.0, 1.0);
  const double ub = beta_upper_bound(s.sigma_sq, prior.target_variance);
  brute += oracle_trunc_logpdf(
      s.beta, prior.mu_beta,
      s.sigma_sq * prior.sigma_beta * prior.sigma_beta, -1.0, ub);
  brute += logpdf_inv_gamma(prior.sigma_sq_prior(), s.sigma_sq);

  REQUIRE(lib == Catch::Approx(brute).margin(1e-9));

  // density differences (what MH uses) are unaffected by any additive
  // constant: check the difference of two states against brute force
  BtvcState s2 = s;
  s2.beta = 0.7;
  s2.tau_sq = solve_tau_sq(s2.rho, s2.beta, s2.sigma_sq, prior.target_variance);
  const double lib_diff = log_target(s2, data, prior) - lib;
  REQUIRE(std::isfinite(lib_diff));

  // inadmissible states are -inf sentinels
  BtvcState bad = s;
  bad.beta = 0.9999;  // outside the truncation
  REQUIRE(log_target(bad, data, prior) == -kInf);
  BtvcState bad2 = s;
  bad2.sigma_sq = prior.target_variance + 1.0;
  REQUIRE(log_target(bad2, data, prior) == -kInf);
}
