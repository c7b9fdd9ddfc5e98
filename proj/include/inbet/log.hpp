#pragma once

#include <string>

namespace inbet {

enum class LogLevel { error = 0, warn = 1, info = 2, debug = 3 };

// Read once from INBET_LOG (error|warn|info|debug); defaults to warn.
LogLevel log_level();
void set_log_level(LogLevel level);

void log_message(LogLevel level, const std::string& message);

inline void log_warn(const std::string& m) { log_message(LogLevel::warn, m); }
inline void log_info(const std::string& m) { log_message(LogLevel::info, m); }
inline void log_debug(const std::string& m) { log_message(LogLevel::debug, m); }

}  // namespace inbet
