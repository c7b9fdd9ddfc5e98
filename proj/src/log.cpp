#include "inbet/log.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>
#include <iostream>

namespace inbet {

namespace {

LogLevel parse_env() {
  const char* v = std::getenv("INBET_LOG");
  if (!v) return LogLevel::warn;
  if (!std::strcmp(v, "error")) return LogLevel::error;
  if (!std::strcmp(v, "info")) return LogLevel::info;
  if (!std::strcmp(v, "debug")) return LogLevel::debug;
  return LogLevel::warn;
}

std::atomic<int>& current() {
  static std::atomic<int> level{static_cast<int>(parse_env())};
  return level;
}

constexpr const char* kNames[] = {"error", "warn", "info", "debug"};

}  // namespace

LogLevel log_level() { return static_cast<LogLevel>(current().load()); }

void set_log_level(LogLevel level) { current() = static_cast<int>(level); }

void log_message(LogLevel level, const std::string& message) {
  if (static_cast<int>(level) > current().load()) return;
  std::cerr << "[" << kNames[static_cast<int>(level)] << "] " << message << '\n';
}

}  // namespace inbet
