// This file is part of dercoopt, a co-optimization library for flexible
// demand and battery storage behind a net-metered revenue meter.
// MIT license; see LICENSE.

#include "dercoopt/demand.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace dercoopt {

namespace {
constexpr double kFeasibilityTol = 1e-9;
}

QuadraticUtility::QuadraticUtility(double alpha, double beta)
    : alpha_(alpha), beta_(beta) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw std::invalid_argument("utility alpha must be positive and finite");
  }
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw std::invalid_argument(
        "utility beta must be positive and finite (linear utility has no "
        "invertible marginal)");
  }
}

double QuadraticUtility::value(double d) const {
  const double sat = saturation();
  if (d >= sat) return alpha_ * sat - 0.5 * beta_ * sat * sat;
  return alpha_ * d - 0.5 * beta_ * d * d;
}

double QuadraticUtility::marginal(double d) const {
  if (d >= saturation()) return 0.0;
  return alpha_ - beta_ * d;
}

double QuadraticUtility::inverse_marginal(double price) const {
  return (alpha_ - price) / beta_;
}

Device::Device(QuadraticUtility utility, double cap)
    : utility_(utility), cap_(cap) {
  if (!(cap >= 0.0) || !std::isfinite(cap)) {
    throw std::invalid_argument("device cap must be >= 0 and finite");
  }
}

double Device::response(double price) const {
  return std::clamp(utility_.inverse_marginal(price), 0.0, cap_);
}

DeviceFleet::DeviceFleet(std::vector<Device> devices)
    : devices_(std::move(devices)) {
  for (const Device& dev : devices_) {
    total_cap_ += dev.cap();
    max_alpha_ = std::max(max_alpha_, dev.utility().alpha());
    // Price at which this device hits its cap; any lower price changes
    // nothing for it.
    min_price_bound_ = std::min(
        min_price_bound_,
        dev.utility().alpha() - dev.utility().beta() * dev.cap());
  }
}

double DeviceFleet::response(double price) const {
  double total = 0.0;
  for (const Device& dev : devices_) total += dev.response(price);
  return total;
}

std::vector<double> DeviceFleet::responses(double price) const {
  std::vector<double> d(devices_.size());
  for (std::size_t k = 0; k < devices_.size(); ++k) {
    d[k] = devices_[k].response(price);
  }
  return d;
}

Allocation DeviceFleet::water_fill(double total) const {
  if (!(total >= -kFeasibilityTol) ||
      !(total <= total_cap_ + kFeasibilityTol)) {
    throw std::domain_error("water_fill total " + std::to_string(total) +
                            " outside [0, " + std::to_string(total_cap_) +
                            "]");
  }
  total = std::clamp(total, 0.0, total_cap_);

  Allocation out;
  if (devices_.empty()) {
    out.lambda = 0.0;
    return out;
  }
  if (total == 0.0) {
    out.d.assign(devices_.size(), 0.0);
    out.lambda = max_alpha_;
    return out;
  }
  if (total == total_cap_) {
    out.d.resize(devices_.size());
    for (std::size_t k = 0; k < devices_.size(); ++k) {
      out.d[k] = devices_[k].cap();
    }
    out.lambda = min_price_bound_;
    return out;
  }

  // f is non-increasing with f(lo) = total_cap >= total and f(hi) = 0 <=
  // total. Bisect for both edges of {lambda : f(lambda) = total}: the lower
  // edge separates f > total from f <= total, the upper edge separates
  // f >= total from f < total. They coincide where f is strictly decreasing
  // and bracket the plateau otherwise.
  const int max_iters = 200;
  double lo1 = min_price_bound_, hi1 = max_alpha_;
  for (int i = 0; i < max_iters && hi1 - lo1 > 0.0; ++i) {
    const double mid = 0.5 * (lo1 + hi1);
    if (response(mid) > total) {
      lo1 = mid;
    } else {
      hi1 = mid;
    }
    if (hi1 - lo1 <= 1e-15 * std::max(1.0, std::abs(lo1))) break;
  }
  double lo2 = lo1, hi2 = max_alpha_;
  for (int i = 0; i < max_iters && hi2 - lo2 > 0.0; ++i) {
    const double mid = 0.5 * (lo2 + hi2);
    if (response(mid) >= total) {
      lo2 = mid;
    } else {
      hi2 = mid;
    }
    if (hi2 - lo2 <= 1e-15 * std::max(1.0, std::abs(lo2))) break;
  }
  double lambda = 0.5 * ((lo1 + hi1) * 0.5 + (lo2 + hi2) * 0.5);

  // Inside the terminal bracket f is linear (the bracket is far narrower
  // than any segment), so one secant step lands on the exact solution when
  // f is strictly decreasing there; on a plateau the midpoint stands.
  const double f_lo = response(lo1);
  const double f_hi = response(hi2);
  if (f_lo > f_hi) {
    const double t = (f_lo - total) / (f_lo - f_hi);
    if (t >= 0.0 && t <= 1.0) {
      const double secant = lo1 + t * (hi2 - lo1);
      if (std::abs(response(secant) - total) <
          std::abs(response(lambda) - total)) {
        lambda = secant;
      }
    }
  }

  out.lambda = lambda;
  out.d = responses(lambda);
  return out;
}

double DeviceFleet::utility_value(const std::vector<double>& d) const {
  if (d.size() != devices_.size()) {
    throw std::domain_error("allocation size does not match fleet size");
  }
  double total = 0.0;
  for (std::size_t k = 0; k < devices_.size(); ++k) {
    if (d[k] < -kFeasibilityTol ||
        d[k] > devices_[k].cap() + kFeasibilityTol) {
      throw std::domain_error("allocation outside [0, cap] for device " +
                              std::to_string(k));
    }
    total += devices_[k].utility().value(std::clamp(d[k], 0.0,
                                                    devices_[k].cap()));
  }
  return total;
}

}  // namespace dercoopt
