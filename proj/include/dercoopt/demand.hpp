// This file is part of dercoopt, a co-optimization library for flexible
// demand and battery storage behind a net-metered revenue meter.
// MIT license; see LICENSE.

#pragma once

#include <cstddef>
#include <vector>

namespace dercoopt {

// Concave quadratic utility U(d) = alpha*d - beta*d^2/2 on [0, alpha/beta],
// held flat at alpha^2/(2*beta) beyond the saturation point. Marginal utility
// L(d) = alpha - beta*d is strictly decreasing, so L is invertible on the
// rising range. alpha > 0 and beta > 0 are required; a linear utility
// (beta = 0) has no invertible marginal and is rejected.
class QuadraticUtility {
 public:
  QuadraticUtility(double alpha, double beta);

  double value(double d) const;
  double marginal(double d) const;
  // L^{-1}(price) = (alpha - price)/beta, unclamped.
  double inverse_marginal(double price) const;
  double saturation() const { return alpha_ / beta_; }
  double alpha() const { return alpha_; }
  double beta() const { return beta_; }

 private:
  double alpha_;
  double beta_;
};

// One flexible load: a utility curve plus a per-interval consumption cap.
class Device {
 public:
  Device(QuadraticUtility utility, double cap);

  const QuadraticUtility& utility() const { return utility_; }
  double cap() const { return cap_; }

  // Price response f_k(price) = clamp(L^{-1}(price), 0, cap): the consumption
  // at which marginal utility meets the price, truncated to the feasible box.
  double response(double price) const;

 private:
  QuadraticUtility utility_;
  double cap_;
};

// Result of allocating a requested total across devices at equalized
// marginal utility. lambda is the shadow price: every device with an
// interior allocation has marginal utility exactly lambda.
struct Allocation {
  std::vector<double> d;
  double lambda = 0.0;
};

class DeviceFleet {
 public:
  DeviceFleet() = default;
  explicit DeviceFleet(std::vector<Device> devices);

  std::size_t size() const { return devices_.size(); }
  bool empty() const { return devices_.empty(); }
  const Device& operator[](std::size_t k) const { return devices_[k]; }
  const std::vector<Device>& devices() const { return devices_; }

  // Aggregate price response f(price) = sum_k f_k(price); non-increasing,
  // piecewise linear, range [0, total_cap()].
  double response(double price) const;
  double total_cap() const { return total_cap_; }

  // Per-device responses at one price, f_k(price) for every k.
  std::vector<double> responses(double price) const;

  // Splits `total` kWh across devices so marginal utilities equalize at a
  // shadow price lambda with f(lambda) = total. lambda is located by
  // monotone bisection (f is non-increasing); if f plateaus at the requested
  // total the midpoint of the plateau is reported, and the allocation is the
  // same for every lambda in the plateau. Requires 0 <= total <= total_cap().
  Allocation water_fill(double total) const;

  // Sum of device utilities; d must satisfy 0 <= d_k <= cap_k.
  double utility_value(const std::vector<double>& d) const;

 private:
  std::vector<Device> devices_;
  double total_cap_ = 0.0;
  double max_alpha_ = 0.0;
  double min_price_bound_ = 0.0;  // below this price every device is capped
};

}  // namespace dercoopt
