#pragma once

// Predictive path simulation from posterior draws and per-horizon summaries.
// Each retained state yields exactly one path: starting from the observed
// x_t, the recursion x_{t+j} = alpha_{t+j} + beta x_{t+j-1} + eps uses that
// state's alpha~ tail and fresh N(0, sigma^2) noise. Path m draws from the
// stream derived as (rng, "forecast-path", m), so a parallel schedule would
// reproduce the sequential numbers.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <vector>

#include "btvc/conditionals.hpp"
#include "btvc/errors.hpp"
#include "btvc/rng.hpp"
#include "btvc/sampler.hpp"

namespace btvc {

struct ForecastPaths {
  std::size_t n_paths = 0;
  std::size_t horizon = 0;
  std::size_t origin_t = 0;
  double origin_value = 0.0;
  std::vector<double> values;  // row-major: path m, horizon j-1

  double at(std::size_t m, std::size_t j) const {  // j is 1-based horizon
    return values[m * horizon + (j - 1)];
  }
};

inline constexpr std::array<double, 7> kQuantileProbs = {
    0.01, 0.05, 0.25, 0.50, 0.75, 0.95, 0.99};

struct HorizonSummary {
  double mean = 0.0;
  double sd = 0.0;
  std::array<double, 7> quantiles{};  // at kQuantileProbs
};

/// Empirical quantile with linear interpolation between order statistics:
/// q(p) = x_(i) + f (x_(i+1) - x_(i)) with i = floor(p (n-1)), f its
/// fractional part, order statistics 0-based.
inline double quantile_linear(std::vector<double> sorted_or_not, double p) {
  if (sorted_or_not.empty())
    throw ParameterError("quantile_linear: empty sample");
  std::sort(sorted_or_not.begin(), sorted_or_not.end());
  const double k = p * static_cast<double>(sorted_or_not.size() - 1);
  const std::size_t i = static_cast<std::size_t>(k);
  const double f = k - static_cast<double>(i);
  if (i + 1 >= sorted_or_not.size()) return sorted_or_not.back();
  return sorted_or_not[i] + f * (sorted_or_not[i + 1] - sorted_or_not[i]);
}

/// Core simulation anchored at the observed origin value x_t.
inline ForecastPaths simulate_paths_from(const PosteriorDraws& draws,
                                         double origin_value, const Rng& rng) {
  if (draws.states.empty())
    throw ParameterError("simulate_paths: no posterior states");
  if (draws.horizon == 0)
    throw ParameterError("simulate_paths: horizon must be positive");
  const std::size_t t = draws.t;
  const std::size_t h = draws.horizon;

  ForecastPaths out;
  out.n_paths = draws.states.size();
  out.horizon = h;
  out.origin_t = t;
  out.origin_value = origin_value;
  out.values.resize(out.n_paths * h);

  for (std::size_t m = 0; m < out.n_paths; ++m) {
    const BtvcState& s = draws.states[m];
    Rng path_rng = rng.derive("forecast-path", m);
    const double sd = std::sqrt(s.sigma_sq);
    double x = out.origin_value;  // every path is anchored at the observed x_t
    for (std::size_t j = 1; j <= h; ++j) {
      x = s.alpha_tilde[t + j - 1] + s.beta * x + sd * path_rng.standard_normal();
      out.values[m * h + (j - 1)] = x;
    }
  }
  return out;
}

inline ForecastPaths simulate_paths(const PosteriorDraws& draws,
                                    const BtvcData& data, const Rng& rng) {
  data.validate();
  if (data.t() != draws.t)
    throw ParameterError("simulate_paths: data length does not match draws");
  return simulate_paths_from(draws, data.x.back(), rng);
}

/// Per-horizon arithmetic mean across paths.
inline std::vector<double> point_forecast(const ForecastPaths& paths) {
  if (paths.n_paths == 0) throw ParameterError("point_forecast: no paths");
  std::vector<double> mean(paths.horizon, 0.0);
  for (std::size_t m = 0; m < paths.n_paths; ++m)
    for (std::size_t j = 0; j < paths.horizon; ++j)
      mean[j] += paths.values[m * paths.horizon + j];
  for (double& v : mean) v /= static_cast<double>(paths.n_paths);
  return mean;
}

inline HorizonSummary summarize_horizon(const ForecastPaths& paths,
                                        std::size_t j) {
  if (j < 1 || j > paths.horizon)
    throw ParameterError("summarize_horizon: horizon out of range");
  std::vector<double> col(paths.n_paths);
  for (std::size_t m = 0; m < paths.n_paths; ++m) col[m] = paths.at(m, j);

  HorizonSummary s;
  double sum = 0.0;
  for (double v : col) sum += v;
  s.mean = sum / static_cast<double>(col.size());
  double ss = 0.0;
  for (double v : col) ss += (v - s.mean) * (v - s.mean);
  s.sd = col.size() > 1
             ? std::sqrt(ss / static_cast<double>(col.size() - 1))
             : 0.0;
  for (std::size_t q = 0; q < kQuantileProbs.size(); ++q)
    s.quantiles[q] = quantile_linear(col, kQuantileProbs[q]);
  return s;
}

/// Fan-chart CSV: one row per horizon, columns
/// horizon,mean,sd,q01,q05,q25,q50,q75,q95,q99. `shift` is added to every
/// level statistic (used to restore a centering constant).
inline void write_fan_chart(std::ostream& os, const ForecastPaths& paths,
                            double shift = 0.0) {
  os << "horizon,mean,sd,q01,q05,q25,q50,q75,q95,q99\n";
  char buf[64];
  for (std::size_t j = 1; j <= paths.horizon; ++j) {
    const HorizonSummary s = summarize_horizon(paths, j);
    os << j;
    std::snprintf(buf, sizeof buf, ",%.6f", s.mean + shift);
    os << buf;
    std::snprintf(buf, sizeof buf, ",%.6f", s.sd);
    os << buf;
    for (double q : s.quantiles) {
      std::snprintf(buf, sizeof buf, ",%.6f", q + shift);
      os << buf;
    }
    os << "\n";
  }
}

}  // namespace btvc
