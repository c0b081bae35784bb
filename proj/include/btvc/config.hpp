#pragma once

// Declarative run configuration: one JSON document covering priors, sampler,
// backtest and generator settings. Parsing is strict — unknown keys are
// rejected at every level — and defaults equal the interest-rate
// application's values, printable via the show-config subcommand.

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include <json.hpp>

#include "btvc/backtest.hpp"
#include "btvc/errors.hpp"
#include "btvc/priors.hpp"
#include "btvc/rng.hpp"
#include "btvc/sampler.hpp"
#include "btvc/synthetic.hpp"
#include "btvc/version.hpp"

namespace btvc {

using nlohmann::json;

struct RunConfig {
  std::uint64_t seed = 20250801;
  std::string data;              // input CSV path
  std::string data_kind = "panel";  // "panel" or "series"
  std::string out_dir = "out";
  std::vector<std::string> models = {"btvc", "dns", "ar1", "ar1-restricted"};
  PriorConfig prior;
  SamplerConfig sampler;   // prior is filled from `prior` after parsing
  BacktestConfig backtest;
  std::string simulate_kind = "series";
  SeriesGenConfig series_gen;
  PanelGenConfig panel_gen;

  void validate() const {
    prior.validate();
    SamplerConfig s = sampler;
    s.prior = prior;
    s.validate();
    if (data_kind != "panel" && data_kind != "series")
      throw SchemaError("config: data_kind must be 'panel' or 'series'");
    if (simulate_kind != "panel" && simulate_kind != "series")
      throw SchemaError("config: simulate.kind must be 'panel' or 'series'");
    for (const auto& m : models) (void)parse_model(m);
  }
};

namespace detail {

inline void check_keys(const json& j, const std::set<std::string>& allowed,
                       const std::string& context) {
  if (!j.is_object())
    throw SchemaError("config: " + context + " must be an object");
  for (const auto& item : j.items()) {
    if (!allowed.contains(item.key()))
      throw SchemaError("config: unknown key '" + item.key() + "' in " +
                        context);
  }
}

template <typename T>
void read_to(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if constexpr (std::is_integral_v<T> && std::is_unsigned_v<T>) {
    if (v.is_number_integer() && !v.is_number_unsigned())
      throw SchemaError(std::string("config: '") + key +
                        "' must be non-negative");
  }
  try {
    out = v.get<T>();
  } catch (const json::exception& e) {
    throw SchemaError(std::string("config: bad value for '") + key +
                      "': " + e.what());
  }
}

}  // namespace detail

inline RunConfig parse_config(const json& j) {
  RunConfig cfg;
  detail::check_keys(j,
                     {"seed", "data", "data_kind", "out_dir", "models",
                      "prior", "sampler", "backtest", "simulate"},
                     "top level");
  detail::read_to(j, "seed", cfg.seed);
  detail::read_to(j, "data", cfg.data);
  detail::read_to(j, "data_kind", cfg.data_kind);
  detail::read_to(j, "out_dir", cfg.out_dir);
  detail::read_to(j, "models", cfg.models);

  if (j.contains("prior")) {
    const json& p = j.at("prior");
    detail::check_keys(p,
                       {"mu_beta", "sigma_beta", "mu_rho", "sigma_rho",
                        "shape_a", "scale_b", "target_variance",
                        "long_run_mean"},
                       "prior");
    detail::read_to(p, "mu_beta", cfg.prior.mu_beta);
    detail::read_to(p, "sigma_beta", cfg.prior.sigma_beta);
    detail::read_to(p, "mu_rho", cfg.prior.mu_rho);
    detail::read_to(p, "sigma_rho", cfg.prior.sigma_rho);
    detail::read_to(p, "shape_a", cfg.prior.shape_a);
    detail::read_to(p, "scale_b", cfg.prior.scale_b);
    detail::read_to(p, "target_variance", cfg.prior.target_variance);
    detail::read_to(p, "long_run_mean", cfg.prior.long_run_mean);
  }
  if (j.contains("sampler")) {
    const json& s = j.at("sampler");
    detail::check_keys(s, {"iterations", "burn_in", "thinning", "horizon"},
                       "sampler");
    detail::read_to(s, "iterations", cfg.sampler.iterations);
    detail::read_to(s, "burn_in", cfg.sampler.burn_in);
    detail::read_to(s, "thinning", cfg.sampler.thinning);
    detail::read_to(s, "horizon", cfg.sampler.horizon);
  }
  if (j.contains("backtest")) {
    const json& b = j.at("backtest");
    detail::check_keys(b,
                       {"initial_window", "horizons", "report_maturities",
                        "end_buffer", "mcmc_iterations", "mcmc_burn_in",
                        "refit_pca_per_origin"},
                       "backtest");
    detail::read_to(b, "initial_window", cfg.backtest.initial_window);
    detail::read_to(b, "horizons", cfg.backtest.horizons);
    detail::read_to(b, "report_maturities", cfg.backtest.report_maturities);
    detail::read_to(b, "end_buffer", cfg.backtest.end_buffer);
    detail::read_to(b, "mcmc_iterations", cfg.backtest.mcmc_iterations);
    detail::read_to(b, "mcmc_burn_in", cfg.backtest.mcmc_burn_in);
    detail::read_to(b, "refit_pca_per_origin",
                    cfg.backtest.refit_pca_per_origin);
  }
  if (j.contains("simulate")) {
    const json& s = j.at("simulate");
    detail::check_keys(s,
                       {"kind", "length", "rho", "beta", "sigma_sq",
                        "target_variance", "tau_sq", "warmup", "shift",
                        "panel"},
                       "simulate");
    detail::read_to(s, "kind", cfg.simulate_kind);
    detail::read_to(s, "length", cfg.series_gen.length);
    detail::read_to(s, "rho", cfg.series_gen.rho);
    detail::read_to(s, "beta", cfg.series_gen.beta);
    detail::read_to(s, "sigma_sq", cfg.series_gen.sigma_sq);
    detail::read_to(s, "target_variance", cfg.series_gen.target_variance);
    detail::read_to(s, "warmup", cfg.series_gen.warmup);
    detail::read_to(s, "shift", cfg.series_gen.shift);
    if (s.contains("tau_sq") && !s.at("tau_sq").is_null())
      cfg.series_gen.tau_sq = s.at("tau_sq").get<double>();
    if (s.contains("panel")) {
      const json& p = s.at("panel");
      detail::check_keys(p,
                         {"slope_gamma", "slope_var", "noise_sd", "maturities",
                          "curve_base", "curve_range"},
                         "simulate.panel");
      detail::read_to(p, "slope_gamma", cfg.panel_gen.slope_gamma);
      detail::read_to(p, "slope_var", cfg.panel_gen.slope_var);
      detail::read_to(p, "noise_sd", cfg.panel_gen.noise_sd);
      detail::read_to(p, "maturities", cfg.panel_gen.maturities);
      detail::read_to(p, "curve_base", cfg.panel_gen.curve_base);
      detail::read_to(p, "curve_range", cfg.panel_gen.curve_range);
    }
  }
  cfg.panel_gen.level = cfg.series_gen;
  cfg.sampler.prior = cfg.prior;
  cfg.sampler.seed = cfg.seed;
  cfg.validate();
  return cfg;
}

inline json to_json(const RunConfig& cfg) {
  json j;
  j["seed"] = cfg.seed;
  j["data"] = cfg.data;
  j["data_kind"] = cfg.data_kind;
  j["out_dir"] = cfg.out_dir;
  j["models"] = cfg.models;
  j["prior"] = {{"mu_beta", cfg.prior.mu_beta},
                {"sigma_beta", cfg.prior.sigma_beta},
                {"mu_rho", cfg.prior.mu_rho},
                {"sigma_rho", cfg.prior.sigma_rho},
                {"shape_a", cfg.prior.shape_a},
                {"scale_b", cfg.prior.scale_b},
                {"target_variance", cfg.prior.target_variance},
                {"long_run_mean", cfg.prior.long_run_mean}};
  j["sampler"] = {{"iterations", cfg.sampler.iterations},
                  {"burn_in", cfg.sampler.burn_in},
                  {"thinning", cfg.sampler.thinning},
                  {"horizon", cfg.sampler.horizon}};
  j["backtest"] = {{"initial_window", cfg.backtest.initial_window},
                   {"horizons", cfg.backtest.horizons},
                   {"report_maturities", cfg.backtest.report_maturities},
                   {"end_buffer", cfg.backtest.end_buffer},
                   {"mcmc_iterations", cfg.backtest.mcmc_iterations},
                   {"mcmc_burn_in", cfg.backtest.mcmc_burn_in},
                   {"refit_pca_per_origin", cfg.backtest.refit_pca_per_origin}};
  json sim = {{"kind", cfg.simulate_kind},
              {"length", cfg.series_gen.length},
              {"rho", cfg.series_gen.rho},
              {"beta", cfg.series_gen.beta},
              {"sigma_sq", cfg.series_gen.sigma_sq},
              {"target_variance", cfg.series_gen.target_variance},
              {"warmup", cfg.series_gen.warmup},
              {"shift", cfg.series_gen.shift},
              {"panel",
               {{"slope_gamma", cfg.panel_gen.slope_gamma},
                {"slope_var", cfg.panel_gen.slope_var},
                {"noise_sd", cfg.panel_gen.noise_sd},
                {"maturities", cfg.panel_gen.maturities},
                {"curve_base", cfg.panel_gen.curve_base},
                {"curve_range", cfg.panel_gen.curve_range}}}};
  if (cfg.series_gen.tau_sq)
    sim["tau_sq"] = *cfg.series_gen.tau_sq;
  else
    sim["tau_sq"] = nullptr;
  j["simulate"] = sim;
  return j;
}

inline RunConfig load_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config file: " + path);
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("config: invalid JSON: ") + e.what());
  }
  return parse_config(j);
}

inline std::string hash_bytes(const std::string& bytes) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "fnv1a:%016llx",
                static_cast<unsigned long long>(detail::fnv1a64(bytes)));
  return buf;
}

inline std::string hash_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open file for hashing: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return hash_bytes(ss.str());
}

/// Hash of the fully resolved configuration (canonical JSON dump).
inline std::string config_hash(const RunConfig& cfg) {
  return hash_bytes(to_json(cfg).dump());
}

}  // namespace btvc
