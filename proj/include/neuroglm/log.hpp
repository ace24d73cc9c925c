#pragma once

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>

namespace neuroglm::log {

enum class Level { debug = 0, info = 1, warn = 2, error = 3, off = 4 };

// Level comes from NEUROGLM_LOG (debug|info|warn|error|off); default warn so
// library use stays quiet.
inline Level threshold() {
    static Level lvl = [] {
        const char* env = std::getenv("NEUROGLM_LOG");
        if (!env)
            return Level::warn;
        if (!std::strcmp(env, "debug"))
            return Level::debug;
        if (!std::strcmp(env, "info"))
            return Level::info;
        if (!std::strcmp(env, "warn"))
            return Level::warn;
        if (!std::strcmp(env, "error"))
            return Level::error;
        if (!std::strcmp(env, "off"))
            return Level::off;
        return Level::warn;
    }();
    return lvl;
}

inline void emit(Level lvl, const std::string& msg) {
    if (lvl < threshold())
        return;
    static const char* names[] = {"debug", "info", "warn", "error"};
    std::fprintf(stderr, "[neuroglm] %s: %s\n",
                 names[static_cast<int>(lvl)], msg.c_str());
}

inline void debug(const std::string& msg) { emit(Level::debug, msg); }
inline void info(const std::string& msg) { emit(Level::info, msg); }
inline void warn(const std::string& msg) { emit(Level::warn, msg); }
inline void error(const std::string& msg) { emit(Level::error, msg); }

} // namespace neuroglm::log
