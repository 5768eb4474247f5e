#pragma once

// Minimal leveled logging to standard error. Standard output stays reserved
// for machine-readable results. The threshold is read once from the
// HGHZ_LOG_LEVEL environment variable (error, warn, info, debug).

#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>
#include <string_view>

namespace hghz::log {

enum class Level { error = 0, warn = 1, info = 2, debug = 3 };

inline Level parse_level(std::string_view text, Level fallback = Level::warn) {
  if (text == "error") return Level::error;
  if (text == "warn" || text == "warning") return Level::warn;
  if (text == "info") return Level::info;
  if (text == "debug") return Level::debug;
  return fallback;
}

inline Level& threshold() {
  static Level level = [] {
    const char* env = std::getenv("HGHZ_LOG_LEVEL");
    return env ? parse_level(env) : Level::warn;
  }();
  return level;
}

inline void set_threshold(Level level) { threshold() = level; }

inline void write(Level level, std::string_view message) {
  if (static_cast<int>(level) > static_cast<int>(threshold())) return;
  static std::mutex mutex;
  static constexpr std::string_view tags[] = {"error", "warn", "info", "debug"};
  std::lock_guard lock(mutex);
  std::cerr << "[hghz " << tags[static_cast<int>(level)] << "] " << message << '\n';
}

inline void error(std::string_view m) { write(Level::error, m); }
inline void warn(std::string_view m) { write(Level::warn, m); }
inline void info(std::string_view m) { write(Level::info, m); }
inline void debug(std::string_view m) { write(Level::debug, m); }

}  // namespace hghz::log
