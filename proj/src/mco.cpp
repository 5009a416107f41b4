// This file is part of dercoopt, a co-optimization library for flexible
// demand and battery storage behind a net-metered revenue meter.
// MIT license; see LICENSE.

#include "dercoopt/mco.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "json.hpp"

#include "dercoopt/csvio.hpp"

namespace dercoopt {

FleetSchedule::FleetSchedule(DeviceFleet fleet) {
  fleets_.push_back(std::move(fleet));
}

FleetSchedule::FleetSchedule(std::vector<DeviceFleet> fleets)
    : fleets_(std::move(fleets)) {
  if (fleets_.empty()) {
    throw std::invalid_argument("fleet schedule needs at least one fleet");
  }
}

const DeviceFleet& FleetSchedule::at(std::size_t t) const {
  if (fleets_.empty()) {
    throw std::out_of_range("fleet schedule is empty");
  }
  return fleets_.size() == 1 ? fleets_.front() : fleets_.at(t);
}

double stage_reward(const TariffInterval& tariff, const DeviceFleet& fleet,
                    const Decision& decision, double g,
                    double degradation_cost_rate) {
  const double base = surplus(tariff, fleet, decision.d, decision.e, g);
  if (degradation_cost_rate <= 0.0) return base;
  return base - degradation_cost_rate * std::abs(decision.e);
}

Trajectory run_mco(const TariffSchedule& tariff, const FleetSchedule& fleets,
                   const BatterySpec& spec, double soc0,
                   const std::vector<double>& g_path,
                   const McoOptions& options) {
  spec.validate();
  const std::size_t horizon = tariff.horizon();
  if (horizon == 0) {
    throw std::invalid_argument("tariff schedule is empty");
  }
  if (g_path.size() != horizon) {
    throw std::invalid_argument(
        "renewable path length must match the tariff horizon");
  }
  if (!fleets.uniform() && fleets.size() != horizon) {
    throw std::invalid_argument(
        "fleet schedule must hold one fleet or one per interval");
  }
  if (soc0 < spec.soc_min - kSocTol || soc0 > spec.capacity + kSocTol) {
    throw std::invalid_argument("initial state of charge out of bounds");
  }

  const A1Check a1 = check_a1(spec, tariff);

  Trajectory out;
  out.records.reserve(horizon);
  double soc = std::clamp(soc0, spec.soc_min, spec.capacity);
  for (std::size_t t = 0; t < horizon; ++t) {
    const TariffInterval& interval = tariff.at(t);
    const DeviceFleet& fleet = fleets.at(t);
    const double g = g_path[t];
    const ClippedLimits limits = clip_limits(spec, soc);
    const Decision decision =
        a1.ok() ? decide(fleet, interval, spec, limits, g)
                : decide_relaxed_a1(fleet, interval, spec, limits, g,
                                    a1.regime);
    try {
      soc = step_soc(spec, soc, decision.e);
    } catch (const std::domain_error& err) {
      std::ostringstream msg;
      msg << "state-of-charge update failed at interval " << t << ": "
          << err.what();
      throw std::logic_error(msg.str());
    }
    StageRecord record;
    record.t = t;
    record.g = g;
    record.d = decision.d;
    record.e = decision.e;
    record.z = decision.z;
    record.soc_after = soc;
    record.stage_reward = stage_reward(interval, fleet, decision, g,
                                       options.degradation_cost_rate);
    out.records.push_back(std::move(record));
  }

  out.terminal_salvage = spec.salvage_rate * (soc - soc0);
  double total = out.terminal_salvage;
  for (const auto& record : out.records) total += record.stage_reward;
  out.cumulative_reward = total;
  return out;
}

std::string trajectory_to_csv(const Trajectory& trajectory) {
  std::size_t devices = 0;
  for (const auto& record : trajectory.records) {
    devices = std::max(devices, record.d.size());
  }
  std::ostringstream buffer;
  CsvWriter csv(buffer);
  std::vector<std::string> header = {"t", "g"};
  for (std::size_t k = 0; k < devices; ++k) {
    header.push_back("d_" + std::to_string(k + 1));
  }
  header.insert(header.end(), {"e", "z", "soc", "stage_reward"});
  csv.row(header);
  for (const auto& record : trajectory.records) {
    std::vector<std::string> row = {std::to_string(record.t),
                                    format_double(record.g)};
    for (std::size_t k = 0; k < devices; ++k) {
      row.push_back(k < record.d.size() ? format_double(record.d[k])
                                        : std::string());
    }
    row.push_back(format_double(record.e));
    row.push_back(format_double(record.z));
    row.push_back(format_double(record.soc_after));
    row.push_back(format_double(record.stage_reward));
    csv.row(row);
  }
  return buffer.str();
}

std::string trajectory_to_json(const Trajectory& trajectory) {
  nlohmann::json stages = nlohmann::json::array();
  for (const auto& record : trajectory.records) {
    stages.push_back({{"t", record.t},
                      {"g", record.g},
                      {"d", record.d},
                      {"e", record.e},
                      {"z", record.z},
                      {"soc", record.soc_after},
                      {"stage_reward", record.stage_reward}});
  }
  nlohmann::json doc = {
      {"stages", std::move(stages)},
      {"terminal_salvage", trajectory.terminal_salvage},
      {"cumulative_reward", trajectory.cumulative_reward},
  };
  return doc.dump(2);
}

}  // namespace dercoopt
