#pragma once
#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace contea {

enum class LogLevel { quiet = 0, info = 1, debug = 2 };

// Level comes from the CONTEA_LOG environment variable: quiet|info|debug.
inline LogLevel log_level() {
    static LogLevel level = [] {
        const char* env = std::getenv("CONTEA_LOG");
        if (env == nullptr) return LogLevel::info;
        if (std::strcmp(env, "quiet") == 0) return LogLevel::quiet;
        if (std::strcmp(env, "debug") == 0) return LogLevel::debug;
        return LogLevel::info;
    }();
    return level;
}

template <typename... Args>
void log_info(const char* fmt, Args... args) {
    if (log_level() >= LogLevel::info) {
        std::fprintf(stderr, fmt, args...);
        std::fputc('\n', stderr);
    }
}

template <typename... Args>
void log_debug(const char* fmt, Args... args) {
    if (log_level() >= LogLevel::debug) {
        std::fprintf(stderr, fmt, args...);
        std::fputc('\n', stderr);
    }
}

inline void log_info(const char* msg) { log_info("%s", msg); }
inline void log_debug(const char* msg) { log_debug("%s", msg); }

} // namespace contea
