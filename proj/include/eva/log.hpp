#pragma once

#include <string>

namespace eva {

enum class LogLevel { error = 0, info = 1, debug = 2 };

// Threshold parsed once from EVA_LOG_LEVEL (error|info|debug), default info.
LogLevel log_threshold();

// Timestamped line to stderr. Timestamps never appear in report files,
// only here.
void log_line(LogLevel level, const std::string& message);

}  // namespace eva
