#pragma once

#include <cstdlib>
#include <iostream>
#include <string>
#include <string_view>

namespace gcnsim {

enum class LogLevel { Error = 0, Info = 1, Debug = 2 };

// Threshold from GCNSIM_LOG (error|info|debug), read once. Logs go to
// stderr and never into run outputs.
inline LogLevel log_level() {
  static const LogLevel level = [] {
    const char* env = std::getenv("GCNSIM_LOG");
    const std::string_view v = env ? env : "";
    if (v == "debug") return LogLevel::Debug;
    if (v == "info") return LogLevel::Info;
    return LogLevel::Error;
  }();
  return level;
}

inline void log(LogLevel level, std::string_view msg) {
  if (level > log_level()) return;
  static constexpr const char* names[] = {"error", "info", "debug"};
  std::cerr << "gcnsim[" << names[static_cast<int>(level)] << "] " << msg << '\n';
}

}  // namespace gcnsim
