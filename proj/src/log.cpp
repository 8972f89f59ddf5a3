#include "tlknn/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace tlknn {

namespace {
std::atomic<LogLevel> g_level{LogLevel::warning};
std::mutex g_mutex;
}  // namespace

void set_log_level(LogLevel level) { g_level.store(level); }
LogLevel log_level() { return g_level.load(); }

void log_warning(const std::string& message) {
  if (g_level.load() < LogLevel::warning) return;
  std::lock_guard<std::mutex> lock(g_mutex);
  std::clog << "warning: " << message << '\n';
}

void log_info(const std::string& message) {
  if (g_level.load() < LogLevel::info) return;
  std::lock_guard<std::mutex> lock(g_mutex);
  std::clog << message << '\n';
}

}  // namespace tlknn
