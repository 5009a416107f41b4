// This file is part of dercoopt, a co-optimization library for flexible
// demand and battery storage behind a net-metered revenue meter.
// MIT license; see LICENSE.

#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace dercoopt {

// Shortest decimal string that round-trips to the same double (std::to_chars
// general form). Keeps CSV outputs byte-stable across runs.
std::string format_double(double value);

// Minimal CSV emitter: comma separator, "\n" line ends, no quoting (callers
// only pass number strings and plain identifiers).
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}

  void row(const std::vector<std::string>& cells);

 private:
  std::ostream& out_;
};

std::string csv_join(const std::vector<std::string>& cells);

}  // namespace dercoopt
