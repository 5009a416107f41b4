// This file is part of dercoopt, a co-optimization library for flexible
// demand and battery storage behind a net-metered revenue meter.
// MIT license; see LICENSE.

#pragma once

#include <cstddef>
#include <string>

namespace dercoopt {

class TariffSchedule;

// Absolute slack applied to state-of-charge and rate-limit feasibility
// checks before an operation is rejected.
inline constexpr double kSocTol = 1e-9;

// Physical battery parameters. e is the meter-side draw of the battery:
// e > 0 charges (the meter sees extra consumption), e < 0 discharges.
// charge_eff is the fraction of drawn energy that lands in the cell;
// discharge_eff is the fraction of cell energy that reaches the meter.
struct BatterySpec {
  double capacity = 0.0;
  double charge_limit = 0.0;
  double discharge_limit = 0.0;
  double charge_eff = 1.0;
  double discharge_eff = 1.0;
  double salvage_rate = 0.0;
  double soc_min = 0.0;

  void validate() const;

  // Value credited per unit of cell energy when charging: charge_eff *
  // salvage_rate.
  double charge_value() const { return charge_eff * salvage_rate; }

  // Salvage given up per unit of meter energy when discharging:
  // salvage_rate / discharge_eff.
  double discharge_cost() const { return salvage_rate / discharge_eff; }
};

// Meter-side draw limits once the current state of charge is accounted
// for. Both are nonnegative; a feasible draw satisfies
// -discharge <= e <= charge.
struct ClippedLimits {
  double charge = 0.0;
  double discharge = 0.0;
};

ClippedLimits clip_limits(const BatterySpec& spec, double soc);

// Applies the charge dynamics for one interval and returns the new state
// of charge, clamped into [soc_min, capacity]. Throws std::domain_error
// when e exceeds the rate limits or would push the state of charge out of
// bounds by more than kSocTol.
double step_soc(const BatterySpec& spec, double soc, double e);

// How the salvage rate sits relative to the price range of a schedule.
// a1_ok means stored energy is worth more than any export credit and less
// than any retail price, so the single-interval policy never wants to
// round-trip energy through the grid. The other regimes degenerate the
// policy as named.
enum class SalvageRegime {
  a1_ok,
  always_discharge,
  always_charge,
  always_idle,
  never_charge,
  never_discharge,
};

std::string to_string(SalvageRegime regime);

struct A1Check {
  SalvageRegime regime = SalvageRegime::a1_ok;
  double max_export_rate = 0.0;
  double min_retail_rate = 0.0;
  double charge_value = 0.0;
  double discharge_cost = 0.0;

  bool ok() const { return regime == SalvageRegime::a1_ok; }
};

// Classifies the salvage rate against the whole schedule's price range.
A1Check check_a1(const BatterySpec& spec, const TariffSchedule& tariff);

// Sufficient condition for the rate limits never to bind over a horizon of
// length T starting from soc0: capacity exceeds twice the maximum total
// charge, and soc0 sits far enough from both bounds that T intervals of
// full charging or discharging stay interior.
bool check_a2_sufficient(const BatterySpec& spec, std::size_t horizon,
                         double soc0);

}  // namespace dercoopt
