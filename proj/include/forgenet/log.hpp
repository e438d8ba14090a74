#pragma once

#include <string>

namespace forgenet {

enum class LogLevel { Error = 0, Warn = 1, Info = 2, Debug = 3 };

// Threshold comes from FORGENET_LOG (error|warn|info|debug), default warn.
LogLevel log_threshold() noexcept;
void set_log_threshold(LogLevel level) noexcept;
void log_message(LogLevel level, const std::string& message);

}  // namespace forgenet
