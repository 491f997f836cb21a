#include "eva/log.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <ctime>

namespace eva {

namespace {

LogLevel parse_threshold() {
    const char* env = std::getenv("EVA_LOG_LEVEL");
    if (!env) return LogLevel::info;
    if (std::strcmp(env, "error") == 0) return LogLevel::error;
    if (std::strcmp(env, "debug") == 0) return LogLevel::debug;
    return LogLevel::info;
}

const char* level_name(LogLevel level) {
    switch (level) {
        case LogLevel::error: return "error";
        case LogLevel::info: return "info";
        case LogLevel::debug: return "debug";
    }
    return "info";
}

}  // namespace

LogLevel log_threshold() {
    static const LogLevel threshold = parse_threshold();
    return threshold;
}

void log_line(LogLevel level, const std::string& message) {
    if (static_cast<int>(level) > static_cast<int>(log_threshold())) return;
    std::time_t now = std::time(nullptr);
    std::tm utc{};
    gmtime_r(&now, &utc);
    char stamp[32];
    std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", &utc);
    std::fprintf(stderr, "[%s] %s: %s\n", stamp, level_name(level), message.c_str());
}

}  // namespace eva
