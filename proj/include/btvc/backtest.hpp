#pragma once

// Expanding-window out-of-sample evaluation. For each origin the training
// panel grows by one month; PCA and every factor model are refit on the
// window, fixed horizons are forecast, and errors actual - predicted are
// aggregated into mean / SD / RMSE per (model, maturity, horizon).
//
// Factor-model assignments:
//   btvc            level: BTVC-AR(1) chain      slope: zero-constant OLS AR(1)
//   ar1             level: OLS AR(1) + intercept slope: zero-constant OLS AR(1)
//   ar1-restricted  level: zero-constant AR(1)   slope: zero-constant OLS AR(1)
//   dns             both factors: OLS AR(1) with intercept
//
// SD uses the N-1 denominator; RMSE is the plain root mean of squared
// errors, so RMSE^2 = mean^2 + (N-1)/N * SD^2. Model failures at an origin
// are recorded as gaps and excluded from that model's N.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "btvc/csv.hpp"
#include "btvc/errors.hpp"
#include "btvc/factors.hpp"
#include "btvc/forecast.hpp"
#include "btvc/priors.hpp"
#include "btvc/rng.hpp"
#include "btvc/sampler.hpp"

namespace btvc {

enum class ModelKind { Btvc, Dns, Ar1, Ar1Restricted };

inline const char* model_token(ModelKind m) {
  switch (m) {
    case ModelKind::Btvc: return "btvc";
    case ModelKind::Dns: return "dns";
    case ModelKind::Ar1: return "ar1";
    case ModelKind::Ar1Restricted: return "ar1-restricted";
  }
  return "?";
}

inline const char* model_display_name(ModelKind m) {
  switch (m) {
    case ModelKind::Btvc: return "The BTVC-AR(1)-Factor model";
    case ModelKind::Dns: return "The dynamic Nelson-Siegel model";
    case ModelKind::Ar1: return "The AR(1)-Factor model";
    case ModelKind::Ar1Restricted: return "The restricted AR(1)-Factor model";
  }
  return "?";
}

inline ModelKind parse_model(const std::string& token) {
  if (token == "btvc") return ModelKind::Btvc;
  if (token == "dns") return ModelKind::Dns;
  if (token == "ar1") return ModelKind::Ar1;
  if (token == "ar1-restricted") return ModelKind::Ar1Restricted;
  throw SchemaError("unknown model '" + token +
                    "' (expected btvc, dns, ar1 or ar1-restricted)");
}

struct BacktestConfig {
  std::size_t initial_window = 120;                   // months
  std::vector<std::size_t> horizons = {1, 3, 6, 12};  // months
  std::vector<double> report_maturities = {1, 3, 5, 10};  // years
  std::size_t end_buffer = 12;  // months before the last observation
  std::uint64_t mcmc_iterations = 4000;  // reduced per-origin budget
  std::uint64_t mcmc_burn_in = 1000;
  bool refit_pca_per_origin = true;

  std::size_t max_horizon() const {
    return *std::max_element(horizons.begin(), horizons.end());
  }

  void validate(std::size_t panel_rows) const {
    if (horizons.empty() || report_maturities.empty())
      throw ParameterError("BacktestConfig: horizons and maturities must be non-empty");
    for (std::size_t h : horizons)
      if (h == 0) throw ParameterError("BacktestConfig: horizons must be positive");
    if (end_buffer < max_horizon())
      throw ParameterError("BacktestConfig: end_buffer must cover the largest horizon");
    if (initial_window < 24)
      throw ParameterError("BacktestConfig: initial_window must be at least 24 months");
    if (mcmc_burn_in >= mcmc_iterations)
      throw ParameterError("BacktestConfig: mcmc_burn_in must be below mcmc_iterations");
    if (panel_rows < initial_window + end_buffer + 1)
      throw ParameterError("BacktestConfig: panel too short for the window and buffer");
  }
};

struct BacktestCell {
  ModelKind model;
  double maturity;
  std::size_t horizon;
  std::size_t n = 0;
  double mean_error = 0.0;
  double sd_error = 0.0;
  double rmse = 0.0;
};

struct ErrorStats {
  std::size_t n = 0;
  double mean = 0.0;
  double sd = 0.0;    // N-1 denominator
  double rmse = 0.0;  // sqrt of the plain mean of squares
};

inline ErrorStats summarize_errors(const std::vector<double>& errors) {
  ErrorStats s;
  s.n = errors.size();
  if (errors.empty()) return s;
  double sum = 0.0, ss = 0.0;
  for (double v : errors) {
    sum += v;
    ss += v * v;
  }
  s.mean = sum / static_cast<double>(s.n);
  s.rmse = std::sqrt(ss / static_cast<double>(s.n));
  if (s.n > 1) {
    double dev = 0.0;
    for (double v : errors) dev += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(dev / static_cast<double>(s.n - 1));
  }
  return s;
}

struct BacktestGap {
  ModelKind model;
  std::size_t origin;
  std::string message;
};

struct BacktestReport {
  std::vector<ModelKind> models;
  BacktestConfig config;
  std::string data_fingerprint;
  std::size_t n_origins = 0;
  std::vector<BacktestCell> cells;
  std::vector<BacktestGap> gaps;

  const BacktestCell& cell(ModelKind m, double maturity,
                           std::size_t horizon) const {
    for (const auto& c : cells)
      if (c.model == m && c.horizon == horizon &&
          std::abs(c.maturity - maturity) < 1e-9)
        return c;
    throw ParameterError("BacktestReport: no such cell");
  }
};

inline std::string panel_fingerprint(const YieldPanel& p) {
  std::uint64_t h = detail::kFnvOffset;
  const auto mix = [&](const std::string& s) { h = detail::fnv1a64(s, h); };
  char buf[32];
  for (const auto& d : p.dates) mix(d);
  for (double m : p.maturities) {
    std::snprintf(buf, sizeof buf, "%.17g,", m);
    mix(buf);
  }
  for (double r : p.rates) {
    std::snprintf(buf, sizeof buf, "%.17g,", r);
    mix(buf);
  }
  std::snprintf(buf, sizeof buf, "fnv1a:%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

namespace detail {

struct FactorForecasts {
  std::vector<double> level;  // per horizon
  std::vector<double> slope;
};

inline FactorForecasts forecast_factors(ModelKind model,
                                        const std::vector<double>& level,
                                        const std::vector<double>& slope,
                                        const BacktestConfig& cfg,
                                        const PriorConfig& prior,
                                        const Rng& origin_rng) {
  FactorForecasts out;
  out.level.resize(cfg.horizons.size());
  out.slope.resize(cfg.horizons.size());

  // slope factor: intercept only under dns
  const Ar1Fit slope_fit = fit_ols_ar1(slope, model != ModelKind::Dns);
  for (std::size_t i = 0; i < cfg.horizons.size(); ++i)
    out.slope[i] = ar1_mean_forecast(slope_fit, slope.back(), cfg.horizons[i]);

  if (model == ModelKind::Btvc) {
    SamplerConfig scfg;
    scfg.iterations = cfg.mcmc_iterations;
    scfg.burn_in = cfg.mcmc_burn_in;
    scfg.thinning = 1;
    scfg.horizon = cfg.max_horizon();
    scfg.prior = prior;
    scfg.seed = origin_rng.derive("chain").seed();
    const BtvcData data{level};
    const PosteriorDraws draws = run_chain(data, scfg);
    const ForecastPaths paths =
        simulate_paths(draws, data, origin_rng.derive("paths"));
    const std::vector<double> mean_path = point_forecast(paths);
    for (std::size_t i = 0; i < cfg.horizons.size(); ++i)
      out.level[i] = mean_path[cfg.horizons[i] - 1];
  } else {
    const bool restricted = model == ModelKind::Ar1Restricted;
    const Ar1Fit level_fit = fit_ols_ar1(level, restricted);
    for (std::size_t i = 0; i < cfg.horizons.size(); ++i)
      out.level[i] = ar1_mean_forecast(level_fit, level.back(), cfg.horizons[i]);
  }
  return out;
}

}  // namespace detail

inline BacktestReport run_backtest(const YieldPanel& panel,
                                   const std::vector<ModelKind>& models,
                                   const BacktestConfig& cfg,
                                   const PriorConfig& prior,
                                   std::uint64_t seed) {
  panel.validate();
  cfg.validate(panel.n_rows);
  if (models.empty()) throw ParameterError("run_backtest: no models selected");
  for (double m : cfg.report_maturities) (void)panel.maturity_index(m);

  const std::size_t n_origins =
      panel.n_rows - cfg.initial_window - cfg.end_buffer + 1;

  BacktestReport report;
  report.models = models;
  report.config = cfg;
  report.data_fingerprint = panel_fingerprint(panel);
  report.n_origins = n_origins;

  // errors[model][maturity][horizon] -> accumulated forecast errors
  std::vector<std::vector<std::vector<std::vector<double>>>> errs(
      models.size(),
      std::vector<std::vector<std::vector<double>>>(
          cfg.report_maturities.size(),
          std::vector<std::vector<double>>(cfg.horizons.size())));

  const Rng master(seed);
  const PcaDecomposition pca_initial =
      cfg.refit_pca_per_origin ? PcaDecomposition{}
                               : pca(panel.head(cfg.initial_window), 2);

  for (std::size_t o = 0; o < n_origins; ++o) {
    const std::size_t wlen = cfg.initial_window + o;
    const YieldPanel window = panel.head(wlen);
    const std::size_t origin_time = wlen - 1;

    PcaDecomposition dec;
    std::vector<double> level;
    std::vector<double> slope;
    if (cfg.refit_pca_per_origin) {
      dec = pca(window, 2);
      level = dec.score_column(0);
      slope = dec.score_column(1);
    } else {
      dec = pca_initial;
      level = project_scores(window, dec, 0);
      slope = project_scores(window, dec, 1);
    }

    for (std::size_t mi = 0; mi < models.size(); ++mi) {
      const ModelKind model = models[mi];
      detail::FactorForecasts fc;
      try {
        fc = detail::forecast_factors(
            model, level, slope, cfg, prior,
            master.derive("backtest-origin", o * 16 + mi));
      } catch (const std::exception& e) {
        report.gaps.push_back(BacktestGap{model, o, e.what()});
        continue;
      }
      for (std::size_t hi = 0; hi < cfg.horizons.size(); ++hi) {
        const std::vector<double> curve =
            reconstruct_curve(dec, fc.level[hi], fc.slope[hi]);
        const std::size_t target = origin_time + cfg.horizons[hi];
        for (std::size_t ti = 0; ti < cfg.report_maturities.size(); ++ti) {
          const std::size_t col =
              panel.maturity_index(cfg.report_maturities[ti]);
          const double err = panel.at(target, col) - curve[col];
          errs[mi][ti][hi].push_back(err);
        }
      }
    }
  }

  for (std::size_t mi = 0; mi < models.size(); ++mi) {
    for (std::size_t ti = 0; ti < cfg.report_maturities.size(); ++ti) {
      for (std::size_t hi = 0; hi < cfg.horizons.size(); ++hi) {
        const ErrorStats stats = summarize_errors(errs[mi][ti][hi]);
        BacktestCell cell;
        cell.model = models[mi];
        cell.maturity = cfg.report_maturities[ti];
        cell.horizon = cfg.horizons[hi];
        cell.n = stats.n;
        cell.mean_error = stats.mean;
        cell.sd_error = stats.sd;
        cell.rmse = stats.rmse;
        report.cells.push_back(cell);
      }
    }
  }
  return report;
}

/// CSV rendering, 4-decimal fixed statistics:
/// model,maturity_years,horizon_months,n,mean,sd,rmse
inline std::string render_report_csv(const BacktestReport& report) {
  std::ostringstream os;
  os << "model,maturity_years,horizon_months,n,mean,sd,rmse\n";
  char buf[128];
  for (const auto& c : report.cells) {
    if (c.n == 0) continue;  // empty groups are omitted
    std::snprintf(buf, sizeof buf, "%s,%g,%zu,%zu,%.4f,%.4f,%.4f\n",
                  model_token(c.model), c.maturity, c.horizon, c.n,
                  c.mean_error, c.sd_error, c.rmse);
    os << buf;
  }
  return os.str();
}

/// Aligned-text rendering: one block per horizon, model groups with
/// maturity rows and Mean / Std. Dev. / RMSE columns at 4 decimals.
inline std::string render_report_text(const BacktestReport& report) {
  std::ostringstream os;
  char buf[160];
  for (std::size_t hi = 0; hi < report.config.horizons.size(); ++hi) {
    const std::size_t h = report.config.horizons[hi];
    os << "Results of the out-of-sample " << h << "-month ahead forecasting\n";
    std::snprintf(buf, sizeof buf, "%-12s %12s %12s %12s\n", "Maturity",
                  "Mean", "Std. Dev.", "RMSE");
    os << buf;
    os << std::string(51, '-') << "\n";
    for (const ModelKind model : report.models) {
      bool any = false;
      for (const auto& c : report.cells)
        any = any || (c.model == model && c.horizon == h && c.n > 0);
      if (!any) continue;  // empty model group omitted
      os << model_display_name(model) << "\n";
      for (const auto& c : report.cells) {
        if (c.model != model || c.horizon != h || c.n == 0) continue;
        char label[32];
        std::snprintf(label, sizeof label, "%g year", c.maturity);
        std::snprintf(buf, sizeof buf, "%-12s %12.4f %12.4f %12.4f\n", label,
                      c.mean_error, c.sd_error, c.rmse);
        os << buf;
      }
    }
    os << "\n";
  }
  std::snprintf(buf, sizeof buf,
                "origins: %zu, data fingerprint: %s, gaps: %zu\n",
                report.n_origins, report.data_fingerprint.c_str(),
                report.gaps.size());
  os << buf;
  for (const auto& g : report.gaps) {
    os << "gap: model=" << model_token(g.model) << " origin=" << g.origin
       << " reason=" << g.message << "\n";
  }
  return os.str();
}

}  // namespace btvc
