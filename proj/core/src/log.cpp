#include "nnd/log.hpp"

#include <cstdlib>
#include <string>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "detail/log.hpp"

#include "nnd/error.hpp"

namespace nnd {

namespace log {

spdlog::logger& logger() {
    static const std::shared_ptr<spdlog::logger> instance = [] {
        auto l = spdlog::stderr_color_mt("nnd");
        l->set_level(spdlog::level::warn);
        return l;
    }();
    return *instance;
}

}  // namespace log

LogLevel log_level_from_string(std::string_view name) {
    if (name == "error") return LogLevel::error;
    if (name == "warn") return LogLevel::warn;
    if (name == "info") return LogLevel::info;
    if (name == "debug") return LogLevel::debug;
    throw ConfigError("unknown log level '" + std::string(name) + "' (expected error, warn, info or debug)");
}

void set_log_level(LogLevel level) {
    spdlog::level::level_enum l = spdlog::level::warn;
    switch (level) {
        case LogLevel::error: l = spdlog::level::err; break;
        case LogLevel::warn: l = spdlog::level::warn; break;
        case LogLevel::info: l = spdlog::level::info; break;
        case LogLevel::debug: l = spdlog::level::debug; break;
    }
    log::logger().set_level(l);
    spdlog::set_level(l);
}

void init_logging_from_env() {
    const char* env = std::getenv("NND_LOG");
    set_log_level(env && *env ? log_level_from_string(env) : LogLevel::warn);
}

}  // namespace nnd
