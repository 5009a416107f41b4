// This file is part of dercoopt, a co-optimization library for flexible
// demand and battery storage behind a net-metered revenue meter.
// MIT license; see LICENSE.

#include "dercoopt/storage.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "dercoopt/tariff.hpp"

namespace dercoopt {

void BatterySpec::validate() const {
  if (!std::isfinite(capacity) || capacity <= 0.0) {
    throw std::invalid_argument("battery capacity must be positive");
  }
  if (!std::isfinite(charge_limit) || charge_limit < 0.0) {
    throw std::invalid_argument("battery charge limit must be nonnegative");
  }
  if (!std::isfinite(discharge_limit) || discharge_limit < 0.0) {
    throw std::invalid_argument("battery discharge limit must be nonnegative");
  }
  if (!std::isfinite(charge_eff) || charge_eff <= 0.0 || charge_eff > 1.0) {
    throw std::invalid_argument("charge efficiency must lie in (0, 1]");
  }
  if (!std::isfinite(discharge_eff) || discharge_eff <= 0.0 ||
      discharge_eff > 1.0) {
    throw std::invalid_argument("discharge efficiency must lie in (0, 1]");
  }
  if (!std::isfinite(salvage_rate) || salvage_rate < 0.0) {
    throw std::invalid_argument("salvage rate must be nonnegative");
  }
  if (!std::isfinite(soc_min) || soc_min < 0.0 || soc_min >= capacity) {
    throw std::invalid_argument(
        "soc_min must lie in [0, capacity)");
  }
}

ClippedLimits clip_limits(const BatterySpec& spec, double soc) {
  if (soc < spec.soc_min - kSocTol || soc > spec.capacity + kSocTol) {
    std::ostringstream msg;
    msg << "state of charge " << soc << " outside [" << spec.soc_min << ", "
        << spec.capacity << "]";
    throw std::domain_error(msg.str());
  }
  const double headroom = std::max(spec.capacity - soc, 0.0);
  const double stored = std::max(soc - spec.soc_min, 0.0);
  ClippedLimits out;
  out.charge = std::min(spec.charge_limit, headroom / spec.charge_eff);
  out.discharge = std::min(spec.discharge_limit, spec.discharge_eff * stored);
  return out;
}

double step_soc(const BatterySpec& spec, double soc, double e) {
  const double charge = std::max(e, 0.0);
  const double discharge = std::max(-e, 0.0);
  if (charge > spec.charge_limit + kSocTol) {
    throw std::domain_error("charge draw exceeds the rate limit");
  }
  if (discharge > spec.discharge_limit + kSocTol) {
    throw std::domain_error("discharge draw exceeds the rate limit");
  }
  const double next =
      soc + spec.charge_eff * charge - discharge / spec.discharge_eff;
  if (next < spec.soc_min - kSocTol || next > spec.capacity + kSocTol) {
    std::ostringstream msg;
    msg << "draw " << e << " moves state of charge to " << next
        << ", outside [" << spec.soc_min << ", " << spec.capacity << "]";
    throw std::domain_error(msg.str());
  }
  return std::clamp(next, spec.soc_min, spec.capacity);
}

std::string to_string(SalvageRegime regime) {
  switch (regime) {
    case SalvageRegime::a1_ok:
      return "a1_ok";
    case SalvageRegime::always_discharge:
      return "always_discharge";
    case SalvageRegime::always_charge:
      return "always_charge";
    case SalvageRegime::always_idle:
      return "always_idle";
    case SalvageRegime::never_charge:
      return "never_charge";
    case SalvageRegime::never_discharge:
      return "never_discharge";
  }
  return "unknown";
}

A1Check check_a1(const BatterySpec& spec, const TariffSchedule& tariff) {
  if (tariff.empty()) {
    throw std::invalid_argument("cannot classify an empty tariff schedule");
  }
  A1Check out;
  out.max_export_rate = tariff.max_export_rate();
  out.min_retail_rate = tariff.min_retail_rate();
  out.charge_value = spec.charge_value();
  out.discharge_cost = spec.discharge_cost();

  const double a = out.charge_value;
  const double b = out.discharge_cost;
  const double lo = out.max_export_rate;
  const double hi = out.min_retail_rate;

  if (a >= lo && b <= hi) {
    out.regime = SalvageRegime::a1_ok;
  } else if (b < lo) {
    out.regime = SalvageRegime::always_discharge;
  } else if (a > hi) {
    out.regime = SalvageRegime::always_charge;
  } else if (a < lo && b > hi) {
    out.regime = SalvageRegime::always_idle;
  } else if (a < lo) {
    out.regime = SalvageRegime::never_charge;
  } else {
    out.regime = SalvageRegime::never_discharge;
  }
  return out;
}

bool check_a2_sufficient(const BatterySpec& spec, std::size_t horizon,
                         double soc0) {
  const double t = static_cast<double>(horizon);
  const double max_charge = t * spec.charge_eff * spec.charge_limit;
  const double max_discharge = t * spec.discharge_limit / spec.discharge_eff;
  if (spec.capacity - spec.soc_min <= 2.0 * max_charge) return false;
  return soc0 > spec.soc_min + max_discharge &&
         soc0 < spec.capacity - max_charge;
}

}  // namespace dercoopt
