// This file is part of dercoopt, a co-optimization library for flexible
// demand and battery storage behind a net-metered revenue meter.
// MIT license; see LICENSE.

#pragma once

#include <stdexcept>
#include <string>

namespace dercoopt {

// Bad or inconsistent user-supplied configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A computation was refused because it would exceed a configured size cap
// (CLI exit code 3).
class ResourceError : public std::runtime_error {
 public:
  explicit ResourceError(const std::string& what) : std::runtime_error(what) {}
};

// An iterative solver failed to converge or a numeric sanity check tripped
// (CLI exit code 4).
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace dercoopt
