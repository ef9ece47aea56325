#pragma once

#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <mutex>
#include <string>
#include <unordered_set>

namespace ember::log {

enum class Level : int { error = 0, warn = 1, info = 2, debug = 3 };

// Verbosity comes from the SIM_LOG environment variable
// (error|warn|info|debug); default is warn.
inline Level level() {
    static Level lvl = [] {
        const char* env = std::getenv("SIM_LOG");
        if (!env) return Level::warn;
        if (std::strcmp(env, "error") == 0) return Level::error;
        if (std::strcmp(env, "info") == 0) return Level::info;
        if (std::strcmp(env, "debug") == 0) return Level::debug;
        return Level::warn;
    }();
    return lvl;
}

inline void vemit(Level lvl, const char* tag, const char* fmt, std::va_list args) {
    if (static_cast<int>(lvl) > static_cast<int>(level())) return;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    std::fprintf(stderr, "[%s] ", tag);
    std::vfprintf(stderr, fmt, args);
    std::fputc('\n', stderr);
}

inline void error(const char* fmt, ...) {
    std::va_list args;
    va_start(args, fmt);
    vemit(Level::error, "error", fmt, args);
    va_end(args);
}

inline void warn(const char* fmt, ...) {
    std::va_list args;
    va_start(args, fmt);
    vemit(Level::warn, "warn", fmt, args);
    va_end(args);
}

inline void info(const char* fmt, ...) {
    std::va_list args;
    va_start(args, fmt);
    vemit(Level::info, "info", fmt, args);
    va_end(args);
}

inline void debug(const char* fmt, ...) {
    std::va_list args;
    va_start(args, fmt);
    vemit(Level::debug, "debug", fmt, args);
    va_end(args);
}

// Emits a warning only the first time `tag` is seen, so per-step conditions
// (e.g. particle clamping) do not flood the log on long runs.
inline void warn_once(const std::string& tag, const char* fmt, ...) {
    static std::mutex mu;
    static std::unordered_set<std::string> seen;
    {
        std::lock_guard<std::mutex> lock(mu);
        if (!seen.insert(tag).second) return;
    }
    std::va_list args;
    va_start(args, fmt);
    vemit(Level::warn, "warn", fmt, args);
    va_end(args);
}

} // namespace ember::log
