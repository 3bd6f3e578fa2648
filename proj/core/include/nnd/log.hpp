#pragma once

#include <string_view>

namespace nnd {

enum class LogLevel { error, warn, info, debug };

/// "error", "warn", "info" or "debug"; throws ConfigError otherwise.
LogLevel log_level_from_string(std::string_view name);

void set_log_level(LogLevel level);

/// Reads NND_LOG; unset means warn.
void init_logging_from_env();

}  // namespace nnd
