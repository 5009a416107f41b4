// This file is part of dercoopt, a co-optimization library for flexible
// demand and battery storage behind a net-metered revenue meter.
// MIT license; see LICENSE.

#pragma once

#include <vector>

#include "dercoopt/demand.hpp"
#include "dercoopt/storage.hpp"
#include "dercoopt/tariff.hpp"

namespace dercoopt {

// Breakpoints of renewable output g that separate the regimes of the
// single-interval optimal policy. Ordered import_edge <= ... <= export_edge.
// Below import_edge the prosumer imports while discharging fully; above
// export_edge it exports while charging fully; between them net consumption
// is exactly zero and the edges mark where the storage draw saturates or
// goes idle.
struct ThresholdSet {
  double import_edge = 0.0;
  double full_discharge_edge = 0.0;
  double discharge_idle_edge = 0.0;
  double idle_charge_edge = 0.0;
  double full_charge_edge = 0.0;
  double export_edge = 0.0;
};

// One interval's controls: per-device consumption d, storage draw e
// (positive charges), and the resulting net consumption z = sum(d) + e - g.
struct Decision {
  std::vector<double> d;
  double e = 0.0;
  double z = 0.0;
};

// Computes the policy breakpoints for one interval. Pass the battery's raw
// rate limits for the state-independent thresholds, or the clipped limits
// for the state-aware ones used inside a simulation step. Throws
// std::domain_error when the salvage rate conflicts with this interval's
// rates (stored energy worth less than the export credit or more than the
// retail price); decide_relaxed_a1 handles those regimes.
ThresholdSet thresholds(const DeviceFleet& fleet, const TariffInterval& tariff,
                        const BatterySpec& spec, const ClippedLimits& limits);

// Single-interval optimal consumption and storage draw given renewable
// output g >= 0. Seven branches keyed by where g falls among the
// thresholds; branch intervals are closed on the left.
Decision decide(const DeviceFleet& fleet, const TariffInterval& tariff,
                const BatterySpec& spec, const ClippedLimits& limits,
                double g);

// Optimal consumption with no storage: import at low g, hold net
// consumption at zero in the middle band, export at high g.
Decision decide_no_storage(const DeviceFleet& fleet,
                           const TariffInterval& tariff, double g);

// The no-storage rule extended to a net supply y that may be negative
// (useful when a fixed storage draw has already been subtracted from g).
// The returned z equals sum(d) - y.
Decision consumption_for_net_supply(const DeviceFleet& fleet,
                                    const TariffInterval& tariff, double y);

// Non-optimizing prosumer: devices consume their retail-price response and
// the battery absorbs or releases as much of the imbalance as its limits
// allow, minimizing |z|.
Decision decide_passive(const DeviceFleet& fleet, const TariffInterval& tariff,
                        const BatterySpec& spec, const ClippedLimits& limits,
                        double g);

// Single-interval optimal policy when the salvage rate falls outside the
// schedule's price band. The regime must be one of the five degenerate
// classifications from check_a1; passing a1_ok throws std::domain_error
// (use decide instead).
Decision decide_relaxed_a1(const DeviceFleet& fleet,
                           const TariffInterval& tariff,
                           const BatterySpec& spec,
                           const ClippedLimits& limits, double g,
                           SalvageRegime regime);

}  // namespace dercoopt
