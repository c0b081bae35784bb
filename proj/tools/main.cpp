// btvc command-line tool: simulate / fit / forecast / backtest / pca /
// show-config. All randomness flows from the single config seed through
// labeled stream derivation, every output directory gets a manifest with
// config/data hashes, and reruns with equal manifests are byte-identical.
//
// Exit codes: 0 ok, 1 runtime/numeric failure, 2 input/schema problem.
// Errors are emitted as machine-readable JSON on stderr.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "btvc/backtest.hpp"
#include "btvc/config.hpp"
#include "btvc/conditionals.hpp"
#include "btvc/csv.hpp"
#include "btvc/factors.hpp"
#include "btvc/forecast.hpp"
#include "btvc/sampler.hpp"
#include "btvc/synthetic.hpp"
#include "btvc/version.hpp"

namespace fs = std::filesystem;
using btvc::json;

namespace {

void write_file(const std::string& path, const std::string& content) {
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw btvc::IoError("cannot write file: " + path);
  f << content;
  if (!f) throw btvc::IoError("write failed: " + path);
}

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

struct OutputSet {
  std::string dir;
  std::map<std::string, std::string> hashes;

  std::string path(const std::string& name) const {
    return (fs::path(dir) / name).string();
  }
  void emit(const std::string& name, const std::string& content) {
    write_file(path(name), content);
    hashes[name] = btvc::hash_bytes(content);
  }
};

void write_manifest(OutputSet& out, const std::string& command,
                    const btvc::RunConfig& cfg, const std::string& data_hash) {
  json m;
  m["tool"] = "btvcar";
  m["version"] = btvc::kVersion;
  m["command"] = command;
  m["seed"] = cfg.seed;
  m["config_hash"] = btvc::config_hash(cfg);
  m["data_hash"] = data_hash;
  json outputs = json::object();
  for (const auto& [name, hash] : out.hashes) outputs[name] = hash;
  m["outputs"] = outputs;
  write_file(out.path(command + "_manifest.json"), m.dump(2) + "\n");
}

// ---------------------------------------------------------------- simulate

std::string render_series_csv(const std::vector<double>& series) {
  std::ostringstream os;
  os << "date,value\n";
  int year = 1997, month = 9;
  for (double v : series) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%04d-%02d,%.17g\n", year, month, v);
    os << buf;
    if (++month > 12) {
      month = 1;
      ++year;
    }
  }
  return os.str();
}

std::string render_panel_csv(const btvc::YieldPanel& p) {
  std::ostringstream os;
  os << "date";
  for (double m : p.maturities) os << ",m" << m;
  os << "\n";
  for (std::size_t t = 0; t < p.n_rows; ++t) {
    os << p.dates[t];
    for (std::size_t m = 0; m < p.n_cols; ++m) os << fmt(",%.17g", p.at(t, m));
    os << "\n";
  }
  return os.str();
}

int cmd_simulate(const btvc::RunConfig& cfg) {
  btvc::Rng rng = btvc::Rng(cfg.seed).derive("simulate");
  OutputSet out{cfg.out_dir, {}};

  json truth;
  truth["kind"] = cfg.simulate_kind;
  truth["rho"] = cfg.series_gen.rho;
  truth["beta"] = cfg.series_gen.beta;
  truth["sigma_sq"] = cfg.series_gen.sigma_sq;
  truth["target_variance"] = cfg.series_gen.target_variance;
  truth["tau_sq"] = cfg.series_gen.resolved_tau_sq();
  truth["length"] = cfg.series_gen.length;
  truth["warmup"] = cfg.series_gen.warmup;
  truth["shift"] = cfg.series_gen.shift;

  if (cfg.simulate_kind == "series") {
    const auto series = btvc::generate_btvc_series(cfg.series_gen, rng);
    out.emit("series.csv", render_series_csv(series));
  } else {
    const auto panel = btvc::generate_yield_panel(cfg.panel_gen, rng);
    truth["slope_gamma"] = cfg.panel_gen.slope_gamma;
    truth["slope_var"] = cfg.panel_gen.slope_var;
    truth["noise_sd"] = cfg.panel_gen.noise_sd;
    out.emit("panel.csv", render_panel_csv(panel));
  }
  out.emit("simulate_truth.json", truth.dump(2) + "\n");
  write_manifest(out, "simulate", cfg, "none");
  std::cout << "simulate: wrote "
            << (cfg.simulate_kind == "series" ? "series.csv" : "panel.csv")
            << " to " << cfg.out_dir << "\n";
  return 0;
}

// --------------------------------------------------------------------- fit

std::vector<double> read_series_csv(const std::string& path) {
  const auto table = btvc::csv::read_table_file(path);
  if (table.header.size() != 2 || table.header[0] != "date" ||
      table.header[1] != "value")
    throw btvc::SchemaError(path + ": series header must be 'date,value'");
  std::vector<double> out;
  out.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r)
    out.push_back(
        btvc::csv::parse_double(table.rows[r][1], table.line_numbers[r]));
  return out;
}

std::string render_draws_csv(const btvc::PosteriorDraws& draws) {
  std::ostringstream os;
  os << "beta,sigma_sq,rho,tau_sq";
  for (std::size_t j = 1; j <= draws.horizon; ++j) os << ",alpha_f" << j;
  os << "\n";
  for (const auto& s : draws.states) {
    os << fmt("%.17g", s.beta) << fmt(",%.17g", s.sigma_sq)
       << fmt(",%.17g", s.rho) << fmt(",%.17g", s.tau_sq);
    for (std::size_t j = 0; j < draws.horizon; ++j)
      os << fmt(",%.17g", s.alpha_tilde[draws.t + j]);
    os << "\n";
  }
  return os.str();
}

std::string render_pca_csv(const btvc::PcaDecomposition& dec,
                           const std::vector<double>& maturities) {
  std::ostringstream os;
  os << "maturity,mean";
  for (std::size_t k = 0; k < dec.n_components; ++k) os << ",loading" << k + 1;
  os << "\n";
  for (std::size_t m = 0; m < dec.n_maturities; ++m) {
    os << maturities[m] << fmt(",%.17g", dec.mean_curve[m]);
    for (std::size_t k = 0; k < dec.n_components; ++k)
      os << fmt(",%.17g", dec.loading(m, k));
    os << "\n";
  }
  return os.str();
}

json diagnostics_json(const btvc::PosteriorDraws& draws) {
  json d;
  d["acceptance_rate"] = draws.acceptance_rate;
  d["retained_states"] = draws.states.size();
  json params = json::object();
  for (const auto& e : draws.diagnostics.entries) {
    json p;
    p["ess"] = e.ess_defined ? json(e.ess) : json(nullptr);
    p["rhat"] = std::isfinite(e.rhat) ? json(e.rhat) : json(nullptr);
    params[e.name] = p;
  }
  d["parameters"] = params;
  return d;
}

int cmd_fit(const btvc::RunConfig& cfg) {
  if (cfg.data.empty())
    throw btvc::SchemaError("config: 'data' path is required for fit");
  const std::string data_hash = btvc::hash_file(cfg.data);
  OutputSet out{cfg.out_dir, {}};

  btvc::BtvcData data;
  double shift = 0.0;
  if (cfg.data_kind == "panel") {
    std::ifstream f(cfg.data);
    if (!f) throw btvc::IoError("cannot open file: " + cfg.data);
    const auto panel = btvc::read_yield_panel(f, cfg.data);
    const auto dec = btvc::pca(panel, 2);
    if (dec.rank_deficient)
      std::cerr << "warning: panel covariance is rank deficient beyond the "
                   "requested components\n";
    data.x = dec.score_column(0);
    const auto slope = dec.score_column(1);
    const auto slope_fit = btvc::fit_ols_ar1(slope, true);
    out.emit("pca.csv", render_pca_csv(dec, panel.maturities));
    json sj;
    sj["c"] = slope_fit.c;
    sj["gamma"] = slope_fit.gamma;
    sj["resid_var"] = slope_fit.resid_var;
    sj["last_value"] = slope.back();
    out.emit("slope_ar1.json", sj.dump(2) + "\n");
  } else {
    shift = cfg.prior.long_run_mean;
    data.x = read_series_csv(cfg.data);
    for (double& v : data.x) v -= shift;
  }
  data.validate();

  btvc::SamplerConfig scfg = cfg.sampler;
  scfg.prior = cfg.prior;
  scfg.seed = btvc::Rng(cfg.seed).derive("fit").seed();
  const auto draws = btvc::run_chain(data, scfg);

  out.emit("draws.csv", render_draws_csv(draws));
  out.emit("diagnostics.json", diagnostics_json(draws).dump(2) + "\n");

  json meta;
  meta["kind"] = cfg.data_kind;
  meta["t"] = draws.t;
  meta["horizon"] = draws.horizon;
  meta["x_last"] = data.x.back();
  meta["shift"] = shift;
  meta["data_hash"] = data_hash;
  meta["chain_seed"] = scfg.seed;
  out.emit("fit_meta.json", meta.dump(2) + "\n");

  write_manifest(out, "fit", cfg, data_hash);
  std::cout << "fit: " << draws.states.size()
            << " retained states, acceptance rate "
            << fmt("%.3f", draws.acceptance_rate) << ", outputs in "
            << cfg.out_dir << "\n";
  return 0;
}

// ---------------------------------------------------------------- forecast

struct LoadedFit {
  btvc::PosteriorDraws draws;
  std::string kind;
  double x_last = 0.0;
  double shift = 0.0;
};

json read_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw btvc::IoError("cannot open file: " + path);
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw btvc::SchemaError(path + ": invalid JSON: " + std::string(e.what()));
  }
  return j;
}

LoadedFit load_fit(const std::string& dir) {
  LoadedFit lf;
  const json meta = read_json_file((fs::path(dir) / "fit_meta.json").string());
  lf.kind = meta.at("kind").get<std::string>();
  lf.x_last = meta.at("x_last").get<double>();
  lf.shift = meta.at("shift").get<double>();
  lf.draws.t = meta.at("t").get<std::size_t>();
  lf.draws.horizon = meta.at("horizon").get<std::size_t>();

  const auto table =
      btvc::csv::read_table_file((fs::path(dir) / "draws.csv").string());
  const std::size_t expected = 4 + lf.draws.horizon;
  if (table.header.size() != expected)
    throw btvc::SchemaError("draws.csv: expected " + std::to_string(expected) +
                            " columns");
  lf.draws.states.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    btvc::BtvcState s;
    const long line = table.line_numbers[r];
    s.beta = btvc::csv::parse_double(table.rows[r][0], line);
    s.sigma_sq = btvc::csv::parse_double(table.rows[r][1], line);
    s.rho = btvc::csv::parse_double(table.rows[r][2], line);
    s.tau_sq = btvc::csv::parse_double(table.rows[r][3], line);
    s.alpha_tilde.assign(lf.draws.t + lf.draws.horizon, 0.0);
    for (std::size_t j = 0; j < lf.draws.horizon; ++j)
      s.alpha_tilde[lf.draws.t + j] =
          btvc::csv::parse_double(table.rows[r][4 + j], line);
    lf.draws.states.push_back(std::move(s));
  }
  if (lf.draws.states.empty())
    throw btvc::SchemaError("draws.csv: no retained states");
  return lf;
}

int cmd_forecast(const btvc::RunConfig& cfg,
                 std::optional<std::size_t> horizon_override) {
  LoadedFit lf = load_fit(cfg.out_dir);
  if (horizon_override) {
    if (*horizon_override == 0)
      throw btvc::ParameterError("forecast: horizon must be positive");
    if (*horizon_override > lf.draws.horizon)
      throw btvc::ParameterError(
          "forecast: requested horizon " + std::to_string(*horizon_override) +
          " exceeds the fitted alpha horizon " +
          std::to_string(lf.draws.horizon) +
          "; rerun fit with sampler.horizon >= the requested horizon");
    lf.draws.horizon = *horizon_override;
    for (auto& s : lf.draws.states)
      s.alpha_tilde.resize(lf.draws.t + lf.draws.horizon);
  }

  OutputSet out{cfg.out_dir, {}};
  const btvc::Rng rng = btvc::Rng(cfg.seed).derive("forecast");
  const auto paths = btvc::simulate_paths_from(lf.draws, lf.x_last, rng);

  std::ostringstream fan;
  btvc::write_fan_chart(fan, paths, lf.shift);
  out.emit("fanchart_level.csv", fan.str());

  if (lf.kind == "panel") {
    const auto pt = btvc::csv::read_table_file(
        (fs::path(cfg.out_dir) / "pca.csv").string());
    if (pt.header.size() < 4)
      throw btvc::SchemaError(
          "pca.csv: expected maturity,mean,loading1,loading2");
    std::vector<double> maturities, mean_curve, xi1, xi2;
    for (std::size_t r = 0; r < pt.rows.size(); ++r) {
      const long line = pt.line_numbers[r];
      maturities.push_back(btvc::csv::parse_double(pt.rows[r][0], line));
      mean_curve.push_back(btvc::csv::parse_double(pt.rows[r][1], line));
      xi1.push_back(btvc::csv::parse_double(pt.rows[r][2], line));
      xi2.push_back(btvc::csv::parse_double(pt.rows[r][3], line));
    }
    const json sj =
        read_json_file((fs::path(cfg.out_dir) / "slope_ar1.json").string());
    btvc::Ar1Fit slope_fit;
    slope_fit.c = sj.at("c").get<double>();
    slope_fit.gamma = sj.at("gamma").get<double>();
    slope_fit.resid_var = sj.at("resid_var").get<double>();
    const double slope_last = sj.at("last_value").get<double>();

    const auto find_maturity = [&](double rm) {
      for (std::size_t i = 0; i < maturities.size(); ++i)
        if (std::abs(maturities[i] - rm) < 1e-9) return i;
      throw btvc::ParameterError(
          "forecast: report maturity not present in pca.csv");
    };

    // point forecasts of the curve at the report maturities
    const auto level_mean = btvc::point_forecast(paths);
    std::ostringstream curve;
    curve << "horizon,maturity,rate\n";
    for (std::size_t j = 1; j <= lf.draws.horizon; ++j) {
      const double sf = btvc::ar1_mean_forecast(slope_fit, slope_last, j);
      for (double rm : cfg.backtest.report_maturities) {
        const std::size_t idx = find_maturity(rm);
        const double rate =
            mean_curve[idx] + xi1[idx] * level_mean[j - 1] + xi2[idx] * sf;
        curve << j << "," << rm << fmt(",%.6f", rate) << "\n";
      }
    }
    out.emit("curve_forecast.csv", curve.str());

    // simulated slope paths (OLS parameters fixed, fresh noise) feed the
    // per-maturity rate fan charts
    const std::size_t h = lf.draws.horizon;
    const std::size_t n_paths = lf.draws.states.size();
    std::vector<double> slope_paths(n_paths * h);
    const double slope_sd = std::sqrt(std::max(slope_fit.resid_var, 0.0));
    for (std::size_t m = 0; m < n_paths; ++m) {
      btvc::Rng srng = rng.derive("slope-path", m);
      double s = slope_last;
      for (std::size_t j = 0; j < h; ++j) {
        s = slope_fit.c + slope_fit.gamma * s +
            slope_sd * srng.standard_normal();
        slope_paths[m * h + j] = s;
      }
    }
    for (double rm : cfg.backtest.report_maturities) {
      const std::size_t idx = find_maturity(rm);
      btvc::ForecastPaths rate_paths;
      rate_paths.n_paths = n_paths;
      rate_paths.horizon = h;
      rate_paths.origin_t = lf.draws.t;
      rate_paths.origin_value = 0.0;
      rate_paths.values.resize(n_paths * h);
      for (std::size_t m = 0; m < n_paths; ++m)
        for (std::size_t j = 0; j < h; ++j)
          rate_paths.values[m * h + j] = mean_curve[idx] +
                                         xi1[idx] * paths.values[m * h + j] +
                                         xi2[idx] * slope_paths[m * h + j];
      std::ostringstream rf;
      btvc::write_fan_chart(rf, rate_paths, 0.0);
      char name[64];
      std::snprintf(name, sizeof name, "fanchart_rate_m%g.csv", rm);
      out.emit(name, rf.str());
    }
  }

  write_manifest(out, "forecast", cfg, "fit outputs");
  std::cout << "forecast: " << lf.draws.states.size() << " paths over "
            << lf.draws.horizon << " months, outputs in " << cfg.out_dir
            << "\n";
  return 0;
}

// ---------------------------------------------------------------- backtest

int cmd_backtest(const btvc::RunConfig& cfg) {
  if (cfg.data.empty())
    throw btvc::SchemaError("config: 'data' path is required for backtest");
  if (cfg.data_kind != "panel")
    throw btvc::SchemaError("backtest requires data_kind 'panel'");
  const std::string data_hash = btvc::hash_file(cfg.data);
  std::ifstream f(cfg.data);
  if (!f) throw btvc::IoError("cannot open file: " + cfg.data);
  const auto panel = btvc::read_yield_panel(f, cfg.data);

  std::vector<btvc::ModelKind> models;
  for (const auto& m : cfg.models) models.push_back(btvc::parse_model(m));

  const auto report =
      btvc::run_backtest(panel, models, cfg.backtest, cfg.prior,
                         btvc::Rng(cfg.seed).derive("backtest").seed());

  OutputSet out{cfg.out_dir, {}};
  out.emit("backtest_report.csv", btvc::render_report_csv(report));
  out.emit("backtest_report.txt", btvc::render_report_text(report));
  write_manifest(out, "backtest", cfg, data_hash);
  std::cout << "backtest: " << report.n_origins << " origins, "
            << report.gaps.size() << " gaps, outputs in " << cfg.out_dir
            << "\n";
  return 0;
}

// --------------------------------------------------------------------- pca

int cmd_pca(const btvc::RunConfig& cfg) {
  if (cfg.data.empty())
    throw btvc::SchemaError("config: 'data' path is required for pca");
  const std::string data_hash = btvc::hash_file(cfg.data);
  std::ifstream f(cfg.data);
  if (!f) throw btvc::IoError("cannot open file: " + cfg.data);
  const auto panel = btvc::read_yield_panel(f, cfg.data);
  const auto dec = btvc::pca(panel, 2);
  if (dec.rank_deficient)
    std::cerr << "warning: panel covariance is rank deficient beyond the "
                 "requested components\n";

  OutputSet out{cfg.out_dir, {}};
  out.emit("pca.csv", render_pca_csv(dec, panel.maturities));
  std::ostringstream scores;
  scores << "date,score1,score2\n";
  for (std::size_t t = 0; t < dec.n_rows; ++t)
    scores << panel.dates[t] << fmt(",%.17g", dec.score(t, 0))
           << fmt(",%.17g", dec.score(t, 1)) << "\n";
  out.emit("scores.csv", scores.str());
  std::ostringstream ev;
  ev << "component,explained_ratio\n";
  for (std::size_t k = 0; k < dec.n_components; ++k)
    ev << k + 1 << fmt(",%.17g", dec.explained[k]) << "\n";
  out.emit("explained.csv", ev.str());
  write_manifest(out, "pca", cfg, data_hash);
  std::cout << "pca: explained ratios " << fmt("%.4f", dec.explained[0])
            << ", " << fmt("%.4f", dec.explained[1]) << ", outputs in "
            << cfg.out_dir << "\n";
  return 0;
}

const char* error_type(const std::exception& e) {
  if (dynamic_cast<const btvc::SchemaError*>(&e)) return "schema";
  if (dynamic_cast<const btvc::IoError*>(&e)) return "io";
  if (dynamic_cast<const btvc::ConstraintError*>(&e)) return "constraint";
  if (dynamic_cast<const btvc::ParameterError*>(&e)) return "parameter";
  if (dynamic_cast<const btvc::DivergenceError*>(&e)) return "divergence";
  if (dynamic_cast<const btvc::NumericError*>(&e)) return "numeric";
  return "internal";
}

int exit_code_for(const std::exception& e) {
  const std::string t = error_type(e);
  if (t == "schema" || t == "io" || t == "constraint" || t == "parameter")
    return 2;
  return 1;
}

void print_error(const std::exception& e) {
  json err;
  err["error"]["type"] = error_type(e);
  err["error"]["message"] = e.what();
  if (const auto* se = dynamic_cast<const btvc::SchemaError*>(&e);
      se && se->line() >= 0)
    err["error"]["line"] = se->line();
  std::cerr << err.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian time-varying-constant AR(1) modeling tool"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_override;
  std::uint64_t seed_override = 0;
  bool seed_given = false;
  std::vector<std::string> model_override;
  std::size_t horizon_override = 0;
  bool horizon_given = false;

  const auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* copt = sub->add_option("--config", config_path, "config JSON path");
    if (config_required) copt->required();
    sub->add_option("--out", out_override, "output directory override");
    sub->add_option("--seed", seed_override, "seed override")
        ->each([&seed_given](const std::string&) { seed_given = true; });
    sub->add_option("--model", model_override,
                    "model selection override (repeatable)");
  };

  auto* sim = app.add_subcommand("simulate", "generate synthetic data");
  add_common(sim, true);
  auto* fit = app.add_subcommand("fit", "run the posterior sampler");
  add_common(fit, true);
  auto* fc = app.add_subcommand("forecast", "simulate predictive paths");
  add_common(fc, true);
  fc->add_option("--horizon", horizon_override, "forecast horizon (months)")
      ->each([&horizon_given](const std::string&) { horizon_given = true; });
  auto* bt = app.add_subcommand("backtest", "expanding-window evaluation");
  add_common(bt, true);
  auto* pc = app.add_subcommand("pca", "factor extraction only");
  add_common(pc, true);
  auto* sc = app.add_subcommand("show-config", "print the default config");
  add_common(sc, false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (sc->parsed()) {
      btvc::RunConfig defaults;
      std::cout << btvc::to_json(defaults).dump(2) << "\n";
      return 0;
    }
    btvc::RunConfig cfg = btvc::load_config_file(config_path);
    if (!out_override.empty()) cfg.out_dir = out_override;
    if (seed_given) {
      cfg.seed = seed_override;
      cfg.sampler.seed = seed_override;
    }
    if (!model_override.empty()) cfg.models = model_override;
    cfg.validate();

    if (sim->parsed()) return cmd_simulate(cfg);
    if (fit->parsed()) return cmd_fit(cfg);
    if (fc->parsed())
      return cmd_forecast(
          cfg, horizon_given ? std::optional<std::size_t>(horizon_override)
                             : std::nullopt);
    if (bt->parsed()) return cmd_backtest(cfg);
    if (pc->parsed()) return cmd_pca(cfg);
    return 2;
  } catch (const std::exception& e) {
    print_error(e);
    return exit_code_for(e);
  }
}
