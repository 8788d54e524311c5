#pragma once

#include <iostream>
#include <string_view>

namespace memegp {

enum class LogLevel { Quiet = 0, Info = 1, Debug = 2 };

/// Read once from MEMEGP_LOG: "quiet"/"0", "info"/"1" (default), "debug"/"2".
auto log_level() -> LogLevel;

inline auto log_enabled(LogLevel level) -> bool { return static_cast<int>(log_level()) >= static_cast<int>(level); }

void log_line(LogLevel level, std::string_view message);

} // namespace memegp
