#pragma once

#include <string>

namespace tlknn {

enum class LogLevel { quiet, warning, info };

void set_log_level(LogLevel level);
LogLevel log_level();

// Both write one line to stderr when the level allows it.
void log_warning(const std::string& message);
void log_info(const std::string& message);

}  // namespace tlknn
