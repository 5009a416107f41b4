// This file is part of dercoopt, a co-optimization library for flexible
// demand and battery storage behind a net-metered revenue meter.
// MIT license; see LICENSE.

#pragma once

#include <string_view>

namespace dercoopt {

enum class LogLevel { debug = 0, info = 1, warn = 2, error = 3, off = 4 };

// Active level comes from the DER_COOPT_LOG environment variable
// (debug|info|warn|error|off); default is warn. Read once per process.
LogLevel log_level();

void log_message(LogLevel level, std::string_view message);

inline void log_debug(std::string_view m) { log_message(LogLevel::debug, m); }
inline void log_info(std::string_view m) { log_message(LogLevel::info, m); }
inline void log_warn(std::string_view m) { log_message(LogLevel::warn, m); }
inline void log_error(std::string_view m) { log_message(LogLevel::error, m); }

}  // namespace dercoopt
