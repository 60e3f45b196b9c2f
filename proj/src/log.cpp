#include "trustguard/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace trustguard {

namespace {
std::atomic<int> g_level{static_cast<int>(LogLevel::Warn)};
std::mutex g_mutex;
}  // namespace

void set_log_level(LogLevel level) { g_level = static_cast<int>(level); }
LogLevel log_level() { return static_cast<LogLevel>(g_level.load()); }

void log_warning(std::string_view message) {
  if (g_level < static_cast<int>(LogLevel::Warn)) return;
  std::lock_guard lock(g_mutex);
  std::cerr << "warning: " << message << '\n';
}

void log_info(std::string_view message) {
  if (g_level < static_cast<int>(LogLevel::Info)) return;
  std::lock_guard lock(g_mutex);
  std::cerr << message << '\n';
}

}  // namespace trustguard
