// This file is part of dercoopt, a co-optimization library for flexible
// demand and battery storage behind a net-metered revenue meter.
// MIT license; see LICENSE.

#include "dercoopt/config.hpp"

#include <string>

#include "dercoopt/errors.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace dercoopt;

namespace {

nlohmann::json base_config() {
  return nlohmann::json{
      {"schema_version", 1},
      {"horizon", 4},
      {"n_paths", 3},
      {"seed", 11},
      {"tariff",
       {{"interval",
         {{"retail_rate", 0.4}, {"export_rate", 0.1}}}}},
      {"fleet",
       {{"devices",
         {{{"alpha", 2.0}, {"beta", 1.0}, {"cap", 2.0}}}}}},
      {"battery",
       {{"capacity", 13.5},
        {"charge_limit", 0.5},
        {"discharge_limit", 0.5},
        {"charge_eff", 1.0},
        {"discharge_eff", 1.0},
        {"salvage_rate", 0.2}}},
      {"renewable",
       {{"kind", "profile"},
        {"default_profile", {{"peak", 3.0}, {"sigma_fraction", 0.25}}}}}};
}

ScenarioConfig parse(const nlohmann::json& doc) {
  return parse_config(doc.dump());
}

}  // namespace

TEST_CASE("a minimal config parses with sensible defaults") {
  const ScenarioConfig config = parse(base_config());
  CHECK(config.horizon == 4);
  CHECK(config.n_paths == 3);
  CHECK(config.seed == 11);
  CHECK(config.tariff.horizon() == 4);
  CHECK(config.tariff.at(2).retail_rate == doctest::Approx(0.4));
  CHECK(config.fleets.uniform());
  CHECK(config.fleets.at(0).total_cap() == doctest::Approx(2.0));
  CHECK(config.battery.capacity == doctest::Approx(13.5));
  CHECK(config.soc0 == doctest::Approx(6.75));
  CHECK(config.renewable.kind == RenewableKind::profile);
  CHECK(config.renewable.mu.size() == 4);
  REQUIRE(config.algorithms.size() == 1);
  CHECK(config.algorithms[0] == "mco");
  CHECK(config.out_dir == "out");
  CHECK(config.mpc_window == 1);
  CHECK_FALSE(config.canonical_text.empty());
}

TEST_CASE("optional knobs are honored when present") {
  nlohmann::json doc = base_config();
  doc["algorithms"] = {"mco", "mpc", "dp"};
  doc["mpc_window"] = 3;
  doc["dp_levels"] = 7;
  doc["soc_step"] = 0.05;
  doc["out_dir"] = "results";
  doc["peak_window"] = {2, 3};
  doc["bin_width"] = 0.25;
  doc["gap_limit_sweep"] = {0.1, 0.2};
  doc["battery"]["s0"] = 5.0;
  doc["battery"]["soc_min"] = 1.0;
  const ScenarioConfig config = parse(doc);
  CHECK(config.algorithms.size() == 3);
  CHECK(config.mpc_window == 3);
  CHECK(config.dp_levels == 7);
  CHECK(config.soc_step == doctest::Approx(0.05));
  CHECK(config.out_dir == "results");
  CHECK(config.peak_window == IntervalSet{2, 3});
  CHECK(config.bin_width == doctest::Approx(0.25));
  REQUIRE(config.gap_limit_sweep.size() == 2);
  CHECK(config.soc0 == doctest::Approx(5.0));
  CHECK(config.battery.soc_min == doctest::Approx(1.0));
}

TEST_CASE("per-interval tariffs and fleets must match the horizon") {
  nlohmann::json doc = base_config();
  doc["tariff"] = nlohmann::json::object();
  doc["tariff"]["intervals"] = nlohmann::json::array();
  for (int t = 0; t < 4; ++t) {
    doc["tariff"]["intervals"].push_back(
        {{"retail_rate", 0.4}, {"export_rate", 0.1}});
  }
  CHECK_NOTHROW(parse(doc));
  doc["tariff"]["intervals"].erase(3);
  CHECK_THROWS_AS(parse(doc), ConfigError);
}

TEST_CASE("malformed json and unknown keys are config errors") {
  CHECK_THROWS_AS(parse_config("{ not json"), ConfigError);
  nlohmann::json doc = base_config();
  doc["mystery_knob"] = 1;
  CHECK_THROWS_AS(parse(doc), ConfigError);
  doc = base_config();
  doc["battery"]["mystery"] = 1;
  CHECK_THROWS_AS(parse(doc), ConfigError);
}

TEST_CASE("missing required sections are config errors") {
  for (const char* key : {"schema_version", "horizon", "tariff", "fleet",
                          "battery", "renewable"}) {
    nlohmann::json doc = base_config();
    doc.erase(key);
    CHECK_THROWS_AS(parse(doc), ConfigError);
  }
  nlohmann::json doc = base_config();
  doc["schema_version"] = 2;
  CHECK_THROWS_AS(parse(doc), ConfigError);
}

TEST_CASE("an arbitrage-prone tariff is rejected up front") {
  nlohmann::json doc = base_config();
  doc["tariff"]["interval"]["export_rate"] = 0.4;
  CHECK_THROWS_AS(parse(doc), ConfigError);
}

TEST_CASE("the starting charge must sit inside the battery") {
  nlohmann::json doc = base_config();
  doc["battery"]["s0"] = 14.0;
  CHECK_THROWS_AS(parse(doc), ConfigError);
  doc["battery"]["s0"] = -1.0;
  CHECK_THROWS_AS(parse(doc), ConfigError);
}

TEST_CASE("unknown algorithm names are config errors") {
  nlohmann::json doc = base_config();
  doc["algorithms"] = {"mco", "oracle"};
  CHECK_THROWS_AS(parse(doc), ConfigError);
}

TEST_CASE("peak window indices must fall inside the horizon") {
  nlohmann::json doc = base_config();
  doc["peak_window"] = {2, 9};
  CHECK_THROWS_AS(parse(doc), ConfigError);
}

TEST_CASE("markov renewables parse from explicit chain data") {
  nlohmann::json doc = base_config();
  doc["renewable"] = {
      {"kind", "markov"},
      {"support", {0.0, 2.0}},
      {"initial", {0.5, 0.5}},
      {"transitions",
       {{{0.7, 0.3}, {0.4, 0.6}}}}};
  const ScenarioConfig config = parse(doc);
  CHECK(config.renewable.kind == RenewableKind::markov);
  CHECK(config.renewable.chain.support.size() == 2);
  CHECK_NOTHROW(config.renewable.validate(4));
}

TEST_CASE("explicit profile arrays parse and must fit the horizon") {
  nlohmann::json doc = base_config();
  doc["renewable"] = {{"kind", "profile"},
                      {"mu", {1.0, 2.0, 1.0, 0.0}},
                      {"sigma", {0.1, 0.2, 0.1, 0.0}}};
  const ScenarioConfig config = parse(doc);
  CHECK(config.renewable.mu[1] == doctest::Approx(2.0));
  doc["renewable"]["mu"] = {1.0, 2.0};
  CHECK_THROWS_AS(parse(doc), ConfigError);
}

TEST_CASE("canonical text round-trips to the same canonical text") {
  const ScenarioConfig first = parse(base_config());
  const ScenarioConfig second = parse_config(first.canonical_text);
  CHECK(first.canonical_text == second.canonical_text);
}

TEST_CASE("loading a missing file is a config error") {
  CHECK_THROWS_AS(load_config("/nonexistent/dercoopt.json"), ConfigError);
}

TEST_CASE("diagnostics name the salvage regime and the sizing check") {
  const ScenarioConfig config = parse(base_config());
  const std::string text = config_diagnostics(config);
  CHECK(text.find("a1_ok") != std::string::npos);
  CHECK(text.find("never-binding-limits") != std::string::npos);
}
