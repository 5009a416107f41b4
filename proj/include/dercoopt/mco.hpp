// This file is part of dercoopt, a co-optimization library for flexible
// demand and battery storage behind a net-metered revenue meter.
// MIT license; see LICENSE.

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "dercoopt/demand.hpp"
#include "dercoopt/policy.hpp"
#include "dercoopt/storage.hpp"
#include "dercoopt/tariff.hpp"

namespace dercoopt {

// Device population per interval: either one fleet shared by the whole
// horizon or one fleet per interval.
class FleetSchedule {
 public:
  FleetSchedule() = default;
  explicit FleetSchedule(DeviceFleet fleet);
  explicit FleetSchedule(std::vector<DeviceFleet> fleets);

  std::size_t size() const { return fleets_.size(); }
  bool empty() const { return fleets_.empty(); }
  bool uniform() const { return fleets_.size() == 1; }
  const DeviceFleet& at(std::size_t t) const;

 private:
  std::vector<DeviceFleet> fleets_;
};

struct StageRecord {
  std::size_t t = 0;
  double g = 0.0;
  std::vector<double> d;
  double e = 0.0;
  double z = 0.0;
  double soc_after = 0.0;
  double stage_reward = 0.0;
};

struct Trajectory {
  std::vector<StageRecord> records;
  double terminal_salvage = 0.0;
  double cumulative_reward = 0.0;
};

struct McoOptions {
  // Experimental per-kWh cost on meter-side storage throughput, subtracted
  // from each stage reward. Zero disables it.
  double degradation_cost_rate = 0.0;
};

// One interval's reward: customer surplus minus the optional throughput
// cost degradation_cost_rate * |e|.
double stage_reward(const TariffInterval& tariff, const DeviceFleet& fleet,
                    const Decision& decision, double g,
                    double degradation_cost_rate = 0.0);

// Runs the sequential myopic policy over a whole renewable path: at each
// interval, clip the storage limits to the current state of charge, take the
// single-interval optimal decision, and step the state of charge. The
// cumulative reward includes the terminal salvage salvage_rate * (s_T - s_0).
// When the salvage rate falls outside the schedule's price band the
// matching degenerate policy is used for every interval.
Trajectory run_mco(const TariffSchedule& tariff, const FleetSchedule& fleets,
                   const BatterySpec& spec, double soc0,
                   const std::vector<double>& g_path,
                   const McoOptions& options = {});

// One row per stage: t, g, d_1..d_K, e, z, soc, stage_reward. Fleets of
// unequal size pad missing device columns with empty cells.
std::string trajectory_to_csv(const Trajectory& trajectory);

std::string trajectory_to_json(const Trajectory& trajectory);

}  // namespace dercoopt
