// This file is part of dercoopt, a co-optimization library for flexible
// demand and battery storage behind a net-metered revenue meter.
// MIT license; see LICENSE.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dercoopt/baselines.hpp"
#include "dercoopt/mco.hpp"
#include "dercoopt/scenario.hpp"
#include "dercoopt/storage.hpp"
#include "dercoopt/tariff.hpp"

namespace dercoopt {

// One experiment scenario, loaded from a versioned JSON document. Units are
// kWh and currency per kWh; times are interval indices.
struct ScenarioConfig {
  int schema_version = 1;
  std::size_t horizon = 0;
  std::size_t n_paths = 1;
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  TariffSchedule tariff;
  FleetSchedule fleets;
  BatterySpec battery;
  double soc0 = 0.0;
  McoOptions mco;
  RenewableModel renewable;
  std::vector<std::string> algorithms;
  double soc_step = 1e-2;
  double action_step = 1e-3;
  std::size_t dp_levels = 5;
  std::size_t mpc_window = 1;
  IntervalSet peak_window;
  double bin_width = 0.5;
  std::vector<double> gap_limit_sweep;

  // Canonical dump of the parsed document, echoed into result summaries so
  // a run can be reproduced from its own output.
  std::string canonical_text;
};

// Parses and validates a config document. Any structural or semantic
// problem raises ConfigError naming the offending field. A tariff that
// admits arbitrage (some export rate at or above some retail rate) is a
// hard error.
ScenarioConfig parse_config(const std::string& json_text);

// Reads the file and parses it; a missing or unreadable file raises
// ConfigError.
ScenarioConfig load_config(const std::string& path);

// Human-readable report of the salvage-rate regime and the
// never-binding-limits check for this config.
std::string config_diagnostics(const ScenarioConfig& config);

}  // namespace dercoopt
