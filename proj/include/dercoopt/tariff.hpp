// This file is part of dercoopt, a co-optimization library for flexible
// demand and battery storage behind a net-metered revenue meter.
// MIT license; see LICENSE.

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "dercoopt/demand.hpp"

namespace dercoopt {

// Prices for one billing interval. Rates are in currency per unit of energy,
// the fixed charge in currency per interval. Positive net consumption is
// billed at retail_rate, negative (export) is credited at export_rate.
// avoided_cost_rate is the utility's marginal procurement cost; it only
// enters reporting metrics, never an operating decision.
struct TariffInterval {
  double retail_rate = 0.0;
  double export_rate = 0.0;
  double fixed_charge = 0.0;
  double avoided_cost_rate = 0.0;
};

struct ArbitrageViolation {
  std::size_t export_index = 0;
  std::size_t retail_index = 0;
  double export_rate = 0.0;
  double retail_rate = 0.0;
};

// A horizon of per-interval prices. The schedule is well formed when every
// export rate is strictly below every retail rate across the horizon, which
// rules out a riskless buy-low-sell-high cycle through the meter.
class TariffSchedule {
 public:
  TariffSchedule() = default;
  explicit TariffSchedule(std::vector<TariffInterval> intervals);

  std::size_t horizon() const { return intervals_.size(); }
  bool empty() const { return intervals_.empty(); }
  const TariffInterval& at(std::size_t t) const;
  const std::vector<TariffInterval>& intervals() const { return intervals_; }

  double max_export_rate() const;
  double min_retail_rate() const;

  // All (export interval, retail interval) pairs with export >= retail.
  std::vector<ArbitrageViolation> arbitrage_violations() const;

  // Throws std::domain_error listing the first offending pair.
  void validate_no_arbitrage() const;

 private:
  std::vector<TariffInterval> intervals_;
};

// Net-consumption billing: payment(z) = retail * max(z, 0)
//                                     - export * max(-z, 0) + fixed.
// Positive means the customer pays the utility.
double payment(const TariffInterval& interval, double z);

// Customer surplus for one interval: utility of consumption minus the bill
// at net consumption z = sum(d) + e - g. e is the storage draw (positive
// charges the battery), g the behind-the-meter generation.
double surplus(const TariffInterval& interval, const DeviceFleet& fleet,
               const std::vector<double>& d, double e, double g);

}  // namespace dercoopt
