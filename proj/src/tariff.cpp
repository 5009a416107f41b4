// This file is part of dercoopt, a co-optimization library for flexible
// demand and battery storage behind a net-metered revenue meter.
// MIT license; see LICENSE.

#include "dercoopt/tariff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace dercoopt {

namespace {

void validate_interval(const TariffInterval& iv, std::size_t index) {
  const double fields[] = {iv.retail_rate, iv.export_rate, iv.fixed_charge,
                           iv.avoided_cost_rate};
  for (double v : fields) {
    if (!std::isfinite(v) || v < 0.0) {
      std::ostringstream msg;
      msg << "tariff interval " << index
          << " has a negative or non-finite rate";
      throw std::invalid_argument(msg.str());
    }
  }
}

}  // namespace

TariffSchedule::TariffSchedule(std::vector<TariffInterval> intervals)
    : intervals_(std::move(intervals)) {
  for (std::size_t t = 0; t < intervals_.size(); ++t) {
    validate_interval(intervals_[t], t);
  }
}

const TariffInterval& TariffSchedule::at(std::size_t t) const {
  if (t >= intervals_.size()) {
    throw std::out_of_range("tariff interval index out of range");
  }
  return intervals_[t];
}

double TariffSchedule::max_export_rate() const {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& iv : intervals_) best = std::max(best, iv.export_rate);
  return best;
}

double TariffSchedule::min_retail_rate() const {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& iv : intervals_) best = std::min(best, iv.retail_rate);
  return best;
}

std::vector<ArbitrageViolation> TariffSchedule::arbitrage_violations() const {
  std::vector<ArbitrageViolation> out;
  for (std::size_t i = 0; i < intervals_.size(); ++i) {
    for (std::size_t j = 0; j < intervals_.size(); ++j) {
      if (intervals_[i].export_rate >= intervals_[j].retail_rate) {
        out.push_back({i, j, intervals_[i].export_rate,
                       intervals_[j].retail_rate});
      }
    }
  }
  return out;
}

void TariffSchedule::validate_no_arbitrage() const {
  const auto bad = arbitrage_violations();
  if (bad.empty()) return;
  std::ostringstream msg;
  msg << "tariff admits arbitrage: export rate " << bad.front().export_rate
      << " at interval " << bad.front().export_index
      << " is not below retail rate " << bad.front().retail_rate
      << " at interval " << bad.front().retail_index;
  throw std::domain_error(msg.str());
}

double payment(const TariffInterval& interval, double z) {
  const double imported = std::max(z, 0.0);
  const double exported = std::max(-z, 0.0);
  return interval.retail_rate * imported - interval.export_rate * exported +
         interval.fixed_charge;
}

double surplus(const TariffInterval& interval, const DeviceFleet& fleet,
               const std::vector<double>& d, double e, double g) {
  const double consumed = std::accumulate(d.begin(), d.end(), 0.0);
  const double z = consumed + e - g;
  return fleet.utility_value(d) - payment(interval, z);
}

}  // namespace dercoopt
