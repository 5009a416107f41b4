// This file is part of dercoopt, a co-optimization library for flexible
// demand and battery storage behind a net-metered revenue meter.
// MIT license; see LICENSE.

#include "dercoopt/policy.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <utility>

namespace dercoopt {

namespace {

Decision make_decision(std::vector<double> d, double e, double g) {
  Decision out;
  out.d = std::move(d);
  out.e = e;
  const double total = std::accumulate(out.d.begin(), out.d.end(), 0.0);
  out.z = total + e - g;
  return out;
}

void require_nonnegative_generation(double g) {
  if (!(g >= 0.0)) {
    throw std::domain_error("renewable output must be nonnegative");
  }
}

}  // namespace

ThresholdSet thresholds(const DeviceFleet& fleet, const TariffInterval& tariff,
                        const BatterySpec& spec, const ClippedLimits& limits) {
  if (limits.charge < 0.0 || limits.discharge < 0.0) {
    throw std::invalid_argument("storage draw limits must be nonnegative");
  }
  const double charge_value = spec.charge_value();
  const double discharge_cost = spec.discharge_cost();
  if (charge_value < tariff.export_rate ||
      discharge_cost > tariff.retail_rate) {
    throw std::domain_error(
        "salvage rate falls outside this interval's price band; "
        "use decide_relaxed_a1 with the check_a1 regime");
  }

  const double retail_demand = fleet.response(tariff.retail_rate);
  const double discharge_demand = fleet.response(discharge_cost);
  const double charge_demand = fleet.response(charge_value);
  const double export_demand = fleet.response(tariff.export_rate);

  ThresholdSet ts;
  ts.import_edge = std::max(retail_demand - limits.discharge, 0.0);
  ts.full_discharge_edge = std::max(discharge_demand - limits.discharge, 0.0);
  ts.discharge_idle_edge = discharge_demand;
  ts.idle_charge_edge = charge_demand;
  ts.full_charge_edge = charge_demand + limits.charge;
  ts.export_edge = export_demand + limits.charge;
  return ts;
}

Decision decide(const DeviceFleet& fleet, const TariffInterval& tariff,
                const BatterySpec& spec, const ClippedLimits& limits,
                double g) {
  require_nonnegative_generation(g);
  const ThresholdSet ts = thresholds(fleet, tariff, spec, limits);

  if (g < ts.import_edge) {
    return make_decision(fleet.responses(tariff.retail_rate),
                         -limits.discharge, g);
  }
  if (g < ts.full_discharge_edge) {
    return make_decision(fleet.water_fill(g + limits.discharge).d,
                         -limits.discharge, g);
  }
  if (g < ts.discharge_idle_edge) {
    return make_decision(fleet.responses(spec.discharge_cost()),
                         g - ts.discharge_idle_edge, g);
  }
  if (g < ts.idle_charge_edge) {
    return make_decision(fleet.water_fill(g).d, 0.0, g);
  }
  if (g < ts.full_charge_edge) {
    return make_decision(fleet.responses(spec.charge_value()),
                         g - ts.idle_charge_edge, g);
  }
  if (g < ts.export_edge) {
    return make_decision(fleet.water_fill(g - limits.charge).d, limits.charge,
                         g);
  }
  return make_decision(fleet.responses(tariff.export_rate), limits.charge, g);
}

Decision consumption_for_net_supply(const DeviceFleet& fleet,
                                    const TariffInterval& tariff, double y) {
  const double retail_demand = fleet.response(tariff.retail_rate);
  const double export_demand = fleet.response(tariff.export_rate);
  if (y < retail_demand) {
    return make_decision(fleet.responses(tariff.retail_rate), 0.0, y);
  }
  if (y < export_demand) {
    return make_decision(fleet.water_fill(y).d, 0.0, y);
  }
  return make_decision(fleet.responses(tariff.export_rate), 0.0, y);
}

Decision decide_no_storage(const DeviceFleet& fleet,
                           const TariffInterval& tariff, double g) {
  require_nonnegative_generation(g);
  return consumption_for_net_supply(fleet, tariff, g);
}

Decision decide_passive(const DeviceFleet& fleet, const TariffInterval& tariff,
                        const BatterySpec&, const ClippedLimits& limits,
                        double g) {
  require_nonnegative_generation(g);
  std::vector<double> d = fleet.responses(tariff.retail_rate);
  const double total = std::accumulate(d.begin(), d.end(), 0.0);
  const double e = std::clamp(g - total, -limits.discharge, limits.charge);
  return make_decision(std::move(d), e, g);
}

Decision decide_relaxed_a1(const DeviceFleet& fleet,
                           const TariffInterval& tariff,
                           const BatterySpec& spec,
                           const ClippedLimits& limits, double g,
                           SalvageRegime regime) {
  require_nonnegative_generation(g);

  switch (regime) {
    case SalvageRegime::a1_ok:
      throw std::domain_error(
          "salvage rate sits inside the price band; use decide");
    case SalvageRegime::always_discharge:
    case SalvageRegime::always_charge:
    case SalvageRegime::always_idle: {
      double e = 0.0;
      if (regime == SalvageRegime::always_discharge) e = -limits.discharge;
      if (regime == SalvageRegime::always_charge) e = limits.charge;
      Decision out = consumption_for_net_supply(fleet, tariff, g - e);
      out.e = e;
      return out;
    }
    case SalvageRegime::never_charge: {
      const double discharge_demand = fleet.response(spec.discharge_cost());
      const double export_demand = fleet.response(tariff.export_rate);
      const double import_edge =
          std::max(fleet.response(tariff.retail_rate) - limits.discharge, 0.0);
      const double full_discharge_edge =
          std::max(discharge_demand - limits.discharge, 0.0);
      if (g < import_edge) {
        return make_decision(fleet.responses(tariff.retail_rate),
                             -limits.discharge, g);
      }
      if (g < full_discharge_edge) {
        return make_decision(fleet.water_fill(g + limits.discharge).d,
                             -limits.discharge, g);
      }
      if (g < discharge_demand) {
        return make_decision(fleet.responses(spec.discharge_cost()),
                             g - discharge_demand, g);
      }
      if (g < export_demand) {
        return make_decision(fleet.water_fill(g).d, 0.0, g);
      }
      return make_decision(fleet.responses(tariff.export_rate), 0.0, g);
    }
    case SalvageRegime::never_discharge: {
      const double retail_demand = fleet.response(tariff.retail_rate);
      const double charge_demand = fleet.response(spec.charge_value());
      const double full_charge_edge = charge_demand + limits.charge;
      const double export_edge =
          fleet.response(tariff.export_rate) + limits.charge;
      if (g < retail_demand) {
        return make_decision(fleet.responses(tariff.retail_rate), 0.0, g);
      }
      if (g < charge_demand) {
        return make_decision(fleet.water_fill(g).d, 0.0, g);
      }
      if (g < full_charge_edge) {
        return make_decision(fleet.responses(spec.charge_value()),
                             g - charge_demand, g);
      }
      if (g < export_edge) {
        return make_decision(fleet.water_fill(g - limits.charge).d,
                             limits.charge, g);
      }
      return make_decision(fleet.responses(tariff.export_rate), limits.charge,
                           g);
    }
  }
  throw std::domain_error("unrecognized salvage regime");
}

}  // namespace dercoopt
