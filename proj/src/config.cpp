// This file is part of dercoopt, a co-optimization library for flexible
// demand and battery storage behind a net-metered revenue meter.
// MIT license; see LICENSE.

#include "dercoopt/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <string_view>

#include "json.hpp"

#include "dercoopt/csvio.hpp"
#include "dercoopt/demand.hpp"
#include "dercoopt/errors.hpp"

namespace dercoopt {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& message) {
  throw ConfigError(message);
}

const json& require(const json& doc, const char* key, const char* where) {
  const auto it = doc.find(key);
  if (it == doc.end()) {
    fail(std::string(where) + " is missing \"" + key + "\"");
  }
  return *it;
}

void reject_unknown_keys(const json& doc,
                         std::initializer_list<std::string_view> known,
                         const char* where) {
  if (!doc.is_object()) {
    fail(std::string(where) + " must be a JSON object");
  }
  for (const auto& item : doc.items()) {
    if (std::find(known.begin(), known.end(), item.key()) == known.end()) {
      fail(std::string(where) + " has unknown key \"" + item.key() + "\"");
    }
  }
}

double number_field(const json& doc, const char* key, const char* where) {
  const json& value = require(doc, key, where);
  if (!value.is_number()) {
    fail(std::string(where) + "." + key + " must be a number");
  }
  return value.get<double>();
}

double number_or(const json& doc, const char* key, double fallback,
                 const char* where) {
  if (!doc.contains(key)) return fallback;
  return number_field(doc, key, where);
}

std::size_t count_field(const json& doc, const char* key, const char* where) {
  const json& value = require(doc, key, where);
  if (!value.is_number_unsigned()) {
    fail(std::string(where) + "." + key +
         " must be a nonnegative integer");
  }
  return value.get<std::size_t>();
}

std::size_t count_or(const json& doc, const char* key, std::size_t fallback,
                     const char* where) {
  if (!doc.contains(key)) return fallback;
  return count_field(doc, key, where);
}

std::string string_field(const json& doc, const char* key,
                         const char* where) {
  const json& value = require(doc, key, where);
  if (!value.is_string()) {
    fail(std::string(where) + "." + key + " must be a string");
  }
  return value.get<std::string>();
}

std::vector<double> number_list(const json& value, const char* where) {
  if (!value.is_array()) {
    fail(std::string(where) + " must be an array of numbers");
  }
  std::vector<double> out;
  out.reserve(value.size());
  for (const auto& entry : value) {
    if (!entry.is_number()) {
      fail(std::string(where) + " must contain only numbers");
    }
    out.push_back(entry.get<double>());
  }
  return out;
}

TariffInterval parse_interval(const json& doc, const char* where) {
  reject_unknown_keys(
      doc, {"retail_rate", "export_rate", "fixed_charge", "avoided_cost_rate"},
      where);
  TariffInterval interval;
  interval.retail_rate = number_field(doc, "retail_rate", where);
  interval.export_rate = number_field(doc, "export_rate", where);
  interval.fixed_charge = number_or(doc, "fixed_charge", 0.0, where);
  interval.avoided_cost_rate =
      number_or(doc, "avoided_cost_rate", 0.0, where);
  return interval;
}

TariffSchedule parse_tariff(const json& doc, std::size_t horizon) {
  reject_unknown_keys(doc, {"interval", "intervals"}, "tariff");
  std::vector<TariffInterval> intervals;
  if (doc.contains("interval") == doc.contains("intervals")) {
    fail("tariff needs exactly one of \"interval\" or \"intervals\"");
  }
  if (doc.contains("interval")) {
    intervals.assign(horizon, parse_interval(doc["interval"],
                                             "tariff.interval"));
  } else {
    const json& list = doc["intervals"];
    if (!list.is_array() || list.size() != horizon) {
      fail("tariff.intervals must be an array with one entry per interval");
    }
    intervals.reserve(horizon);
    for (const auto& entry : list) {
      intervals.push_back(parse_interval(entry, "tariff.intervals[]"));
    }
  }
  return TariffSchedule(std::move(intervals));
}

DeviceFleet parse_devices(const json& list, const char* where) {
  if (!list.is_array() || list.empty()) {
    fail(std::string(where) + " must be a non-empty array of devices");
  }
  std::vector<Device> devices;
  devices.reserve(list.size());
  for (const auto& entry : list) {
    reject_unknown_keys(entry, {"alpha", "beta", "cap"}, where);
    devices.emplace_back(
        QuadraticUtility(number_field(entry, "alpha", where),
                         number_field(entry, "beta", where)),
        number_field(entry, "cap", where));
  }
  return DeviceFleet(std::move(devices));
}

FleetSchedule parse_fleet(const json& doc, std::size_t horizon) {
  reject_unknown_keys(doc, {"devices", "per_interval"}, "fleet");
  if (doc.contains("devices") == doc.contains("per_interval")) {
    fail("fleet needs exactly one of \"devices\" or \"per_interval\"");
  }
  if (doc.contains("devices")) {
    return FleetSchedule(parse_devices(doc["devices"], "fleet.devices"));
  }
  const json& list = doc["per_interval"];
  if (!list.is_array() || list.size() != horizon) {
    fail("fleet.per_interval must list one device array per interval");
  }
  std::vector<DeviceFleet> fleets;
  fleets.reserve(horizon);
  for (const auto& entry : list) {
    fleets.push_back(parse_devices(entry, "fleet.per_interval[]"));
  }
  return FleetSchedule(std::move(fleets));
}

RenewableModel parse_renewable(const json& doc, std::size_t horizon) {
  RenewableModel model;
  model.kind = [&] {
    const std::string kind = string_field(doc, "kind", "renewable");
    try {
      return renewable_kind_from_string(kind);
    } catch (const std::domain_error& error) {
      fail(std::string("renewable.kind: ") + error.what());
    }
  }();
  if (model.kind == RenewableKind::profile) {
    model.mean_scale = number_or(doc, "mean_scale", 1.0, "renewable");
    model.std_scale = number_or(doc, "std_scale", 1.0, "renewable");
    if (doc.contains("default_profile")) {
      reject_unknown_keys(
          doc, {"kind", "mean_scale", "std_scale", "default_profile"},
          "renewable");
      const json& shape = doc["default_profile"];
      reject_unknown_keys(shape, {"peak", "sigma_fraction"},
                          "renewable.default_profile");
      const RenewableModel base = default_daily_profile(
          horizon,
          number_field(shape, "peak", "renewable.default_profile"),
          number_field(shape, "sigma_fraction",
                       "renewable.default_profile"));
      model.mu = base.mu;
      model.sigma = base.sigma;
    } else {
      reject_unknown_keys(doc,
                          {"kind", "mean_scale", "std_scale", "mu", "sigma"},
                          "renewable");
      model.mu = number_list(require(doc, "mu", "renewable"),
                             "renewable.mu");
      model.sigma = number_list(require(doc, "sigma", "renewable"),
                                "renewable.sigma");
    }
  } else {
    reject_unknown_keys(doc, {"kind", "support", "initial", "transitions"},
                        "renewable");
    model.chain.support = number_list(require(doc, "support", "renewable"),
                                      "renewable.support");
    model.chain.initial = number_list(require(doc, "initial", "renewable"),
                                      "renewable.initial");
    const json& transitions = require(doc, "transitions", "renewable");
    if (!transitions.is_array()) {
      fail("renewable.transitions must be an array of matrices");
    }
    for (const auto& matrix : transitions) {
      if (!matrix.is_array()) {
        fail("renewable.transitions must contain matrices");
      }
      std::vector<std::vector<double>> rows;
      rows.reserve(matrix.size());
      for (const auto& row : matrix) {
        rows.push_back(number_list(row, "renewable.transitions[][]"));
      }
      model.chain.transitions.push_back(std::move(rows));
    }
  }
  model.validate(horizon);
  return model;
}

const std::initializer_list<std::string_view> kPolicyNames = {
    "mco",          "mpc",          "dp",           "consumer",
    "solar_exporter", "self_powered", "packaged_sdg", "passive_sdg"};

ScenarioConfig parse_document(const json& doc) {
  reject_unknown_keys(
      doc,
      {"schema_version", "horizon", "n_paths", "seed", "out_dir", "tariff",
       "fleet", "battery", "renewable", "algorithms", "soc_step",
       "action_step", "dp_levels", "mpc_window", "peak_window", "bin_width",
       "gap_limit_sweep"},
      "config");

  ScenarioConfig config;
  config.schema_version =
      static_cast<int>(count_field(doc, "schema_version", "config"));
  if (config.schema_version != 1) {
    fail("config.schema_version must be 1");
  }
  config.horizon = count_field(doc, "horizon", "config");
  if (config.horizon == 0) fail("config.horizon must be at least 1");
  config.n_paths = count_or(doc, "n_paths", 1, "config");
  if (config.n_paths == 0) fail("config.n_paths must be at least 1");
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned()) {
      fail("config.seed must be a nonnegative integer");
    }
    config.seed = doc["seed"].get<std::uint64_t>();
  }
  if (doc.contains("out_dir")) {
    config.out_dir = string_field(doc, "out_dir", "config");
  }

  config.tariff = parse_tariff(require(doc, "tariff", "config"),
                               config.horizon);
  try {
    config.tariff.validate_no_arbitrage();
  } catch (const std::domain_error& error) {
    fail(std::string("tariff admits arbitrage: ") + error.what());
  }

  config.fleets = parse_fleet(require(doc, "fleet", "config"),
                              config.horizon);

  const json& battery = require(doc, "battery", "config");
  reject_unknown_keys(battery,
                      {"capacity", "charge_limit", "discharge_limit",
                       "charge_eff", "discharge_eff", "salvage_rate",
                       "soc_min", "s0", "degradation_cost_rate"},
                      "battery");
  config.battery.capacity = number_field(battery, "capacity", "battery");
  config.battery.charge_limit =
      number_field(battery, "charge_limit", "battery");
  config.battery.discharge_limit =
      number_field(battery, "discharge_limit", "battery");
  config.battery.charge_eff = number_field(battery, "charge_eff", "battery");
  config.battery.discharge_eff =
      number_field(battery, "discharge_eff", "battery");
  config.battery.salvage_rate =
      number_field(battery, "salvage_rate", "battery");
  config.battery.soc_min = number_or(battery, "soc_min", 0.0, "battery");
  config.battery.validate();
  config.soc0 = number_or(
      battery, "s0",
      0.5 * (config.battery.soc_min + config.battery.capacity), "battery");
  if (config.soc0 < config.battery.soc_min ||
      config.soc0 > config.battery.capacity) {
    fail("battery.s0 must lie between soc_min and capacity");
  }
  config.mco.degradation_cost_rate =
      number_or(battery, "degradation_cost_rate", 0.0, "battery");
  if (config.mco.degradation_cost_rate < 0.0) {
    fail("battery.degradation_cost_rate must be nonnegative");
  }

  config.renewable =
      parse_renewable(require(doc, "renewable", "config"), config.horizon);

  if (doc.contains("algorithms")) {
    const json& list = doc["algorithms"];
    if (!list.is_array() || list.empty()) {
      fail("config.algorithms must be a non-empty array of names");
    }
    for (const auto& entry : list) {
      if (!entry.is_string()) {
        fail("config.algorithms must contain strings");
      }
      const std::string name = entry.get<std::string>();
      if (std::find(kPolicyNames.begin(), kPolicyNames.end(), name) ==
          kPolicyNames.end()) {
        fail("config.algorithms has unknown policy \"" + name + "\"");
      }
      config.algorithms.push_back(name);
    }
  } else {
    config.algorithms = {"mco"};
  }

  config.soc_step = number_or(doc, "soc_step", 1e-2, "config");
  if (!(config.soc_step > 0.0)) fail("config.soc_step must be positive");
  config.action_step = number_or(doc, "action_step", 1e-3, "config");
  if (!(config.action_step > 0.0)) {
    fail("config.action_step must be positive");
  }
  config.dp_levels = count_or(doc, "dp_levels", 5, "config");
  if (config.dp_levels == 0) fail("config.dp_levels must be at least 1");
  config.mpc_window = count_or(doc, "mpc_window", 1, "config");
  if (config.mpc_window == 0) fail("config.mpc_window must be at least 1");
  if (doc.contains("peak_window")) {
    const json& list = doc["peak_window"];
    if (!list.is_array()) {
      fail("config.peak_window must be an array of interval indices");
    }
    for (const auto& entry : list) {
      if (!entry.is_number_unsigned()) {
        fail("config.peak_window must contain nonnegative integers");
      }
      const std::size_t t = entry.get<std::size_t>();
      if (t >= config.horizon) {
        fail("config.peak_window index " + std::to_string(t) +
             " is outside the horizon");
      }
      config.peak_window.insert(t);
    }
  }
  config.bin_width = number_or(doc, "bin_width", 0.5, "config");
  if (!(config.bin_width > 0.0)) fail("config.bin_width must be positive");
  if (doc.contains("gap_limit_sweep")) {
    config.gap_limit_sweep =
        number_list(doc["gap_limit_sweep"], "config.gap_limit_sweep");
    for (double level : config.gap_limit_sweep) {
      if (!(level > 0.0)) {
        fail("config.gap_limit_sweep levels must be positive");
      }
    }
  }

  config.canonical_text = doc.dump(2);
  return config;
}

}  // namespace

ScenarioConfig parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& error) {
    fail(std::string("config is not valid JSON: ") + error.what());
  }
  try {
    return parse_document(doc);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& error) {
    fail(std::string("invalid config: ") + error.what());
  }
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream file(path);
  if (!file) {
    fail("cannot open config file: " + path);
  }
  std::ostringstream text;
  text << file.rdbuf();
  return parse_config(text.str());
}

std::string config_diagnostics(const ScenarioConfig& config) {
  const A1Check a1 = check_a1(config.battery, config.tariff);
  const bool a2 =
      check_a2_sufficient(config.battery, config.horizon, config.soc0);
  std::ostringstream out;
  out << "salvage regime: " << to_string(a1.regime) << " (charge value "
      << format_double(a1.charge_value) << ", discharge cost "
      << format_double(a1.discharge_cost) << ", export ceiling "
      << format_double(a1.max_export_rate) << ", retail floor "
      << format_double(a1.min_retail_rate) << ")\n";
  out << "never-binding-limits check: " << (a2 ? "satisfied" : "not satisfied")
      << " (capacity " << format_double(config.battery.capacity)
      << ", horizon " << config.horizon << ", s0 "
      << format_double(config.soc0) << ")\n";
  return out.str();
}

}  // namespace dercoopt
