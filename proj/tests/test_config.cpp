#include <catch2/catch_amalgamated.hpp>

#include "btvc/config.hpp"

using namespace btvc;

TEST_CASE("config: defaults round-trip through json", "[config]") {
  RunConfig defaults;
  const json j = to_json(defaults);
  const RunConfig parsed = parse_config(j);
  REQUIRE(parsed.seed == defaults.seed);
  REQUIRE(parsed.prior.mu_beta == 0.95);
  REQUIRE(parsed.prior.sigma_beta == 0.015);
  REQUIRE(parsed.prior.mu_rho == 0.98);
  REQUIRE(parsed.prior.sigma_rho == 0.001);
  REQUIRE(parsed.prior.shape_a == 0.5);
  REQUIRE(parsed.prior.scale_b == 2.0);
  REQUIRE(parsed.prior.target_variance == 120.0);
  REQUIRE(parsed.backtest.initial_window == 120);
  REQUIRE(parsed.backtest.horizons == std::vector<std::size_t>{1, 3, 6, 12});
  REQUIRE(parsed.backtest.report_maturities ==
          std::vector<double>{1.0, 3.0, 5.0, 10.0});
  REQUIRE(config_hash(parsed) == config_hash(defaults));
}

TEST_CASE("config: unknown keys are rejected at every level", "[config]") {
  json top = to_json(RunConfig{});
  top["mystery"] = 1;
  REQUIRE_THROWS_AS(parse_config(top), SchemaError);

  json nested = to_json(RunConfig{});
  nested["prior"]["sigma"] = 1.0;
  try {
    parse_config(nested);
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    REQUIRE(std::string(e.what()).find("sigma") != std::string::npos);
    REQUIRE(std::string(e.what()).find("prior") != std::string::npos);
  }

  json sim = to_json(RunConfig{});
  sim["simulate"]["panel"]["bogus"] = true;
  REQUIRE_THROWS_AS(parse_config(sim), SchemaError);
}

TEST_CASE("config: type and value errors", "[config]") {
  json bad_type = to_json(RunConfig{});
  bad_type["sampler"]["iterations"] = "many";
  REQUIRE_THROWS_AS(parse_config(bad_type), SchemaError);

  json negative = to_json(RunConfig{});
  negative["sampler"]["iterations"] = -5;
  REQUIRE_THROWS_AS(parse_config(negative), SchemaError);

  json bad_kind = to_json(RunConfig{});
  bad_kind["data_kind"] = "matrix";
  REQUIRE_THROWS_AS(parse_config(bad_kind), SchemaError);

  json bad_model = to_json(RunConfig{});
  bad_model["models"] = {"btvc", "gauss2pp"};
  REQUIRE_THROWS_AS(parse_config(bad_model), SchemaError);

  json bad_prior = to_json(RunConfig{});
  bad_prior["prior"]["sigma_rho"] = -1.0;
  REQUIRE_THROWS_AS(parse_config(bad_prior), ParameterError);
}

TEST_CASE("config: tau_sq override accepts null and zero", "[config]") {
  json j = to_json(RunConfig{});
  REQUIRE(j["simulate"]["tau_sq"].is_null());
  j["simulate"]["tau_sq"] = 0.0;
  const RunConfig cfg = parse_config(j);
  REQUIRE(cfg.series_gen.tau_sq.has_value());
  REQUIRE(*cfg.series_gen.tau_sq == 0.0);
  REQUIRE(cfg.series_gen.resolved_tau_sq() == 0.0);
}

TEST_CASE("hashes are stable and content-sensitive", "[config]") {
  REQUIRE(hash_bytes("abc") == hash_bytes("abc"));
  REQUIRE(hash_bytes("abc") != hash_bytes("abd"));
  RunConfig a;
  RunConfig b;
  b.seed += 1;
  REQUIRE(config_hash(a) != config_hash(b));
}
