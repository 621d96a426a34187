#pragma once
#include <atomic>
#include <iostream>
#include <mutex>
#include <string_view>

namespace varlasso {

enum class LogLevel { debug = 0, info = 1, warn = 2, error = 3, off = 4 };

namespace detail {
inline std::atomic<LogLevel>& log_level_ref()
{
    static std::atomic<LogLevel> level{LogLevel::warn};
    return level;
}
inline std::mutex& log_mutex()
{
    static std::mutex m;
    return m;
}
} // namespace detail

inline void set_log_level(LogLevel level) { detail::log_level_ref().store(level); }
inline LogLevel log_level() { return detail::log_level_ref().load(); }

inline void log(LogLevel level, std::string_view msg)
{
    if (level < log_level()) return;
    static constexpr const char* names[] = {"debug", "info", "warn", "error"};
    std::lock_guard lock(detail::log_mutex());
    std::cerr << "[varlasso:" << names[static_cast<int>(level)] << "] " << msg << '\n';
}

inline void warn(std::string_view msg) { log(LogLevel::warn, msg); }

} // namespace varlasso
