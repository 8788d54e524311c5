#include "memegp/log.hpp"

#include <cstdlib>
#include <mutex>
#include <string>

namespace memegp {

auto log_level() -> LogLevel
{
    static LogLevel const level = [] {
        char const* raw = std::getenv("MEMEGP_LOG");
        if (raw == nullptr) {
            return LogLevel::Info;
        }
        std::string const v(raw);
        if (v == "quiet" || v == "0" || v == "off") {
            return LogLevel::Quiet;
        }
        if (v == "debug" || v == "2") {
            return LogLevel::Debug;
        }
        return LogLevel::Info;
    }();
    return level;
}

void log_line(LogLevel level, std::string_view message)
{
    if (!log_enabled(level)) {
        return;
    }
    static std::mutex mutex;
    std::lock_guard const lock(mutex);
    std::cerr << message << '\n';
}

} // namespace memegp
