#pragma once

#include <cstdlib>
#include <iostream>
#include <string>
#include <string_view>

// Leveled stderr logging. The level comes from the PSL_LOG environment
// variable (debug, info, warn, error, quiet); the default is warn.
namespace qdsps::log {

enum class Level { debug = 0, info = 1, warn = 2, error = 3, quiet = 4 };

inline Level parse_level(std::string_view s)
{
    if (s == "debug") return Level::debug;
    if (s == "info") return Level::info;
    if (s == "error") return Level::error;
    if (s == "quiet" || s == "off") return Level::quiet;
    return Level::warn;
}

inline Level& threshold()
{
    static Level level = [] {
        const char* env = std::getenv("PSL_LOG");
        return env ? parse_level(env) : Level::warn;
    }();
    return level;
}

inline void write(Level level, std::string_view tag, const std::string& msg)
{
    if (level < threshold()) return;
    std::cerr << "[" << tag << "] " << msg << '\n';
}

inline void debug(const std::string& msg) { write(Level::debug, "debug", msg); }
inline void info(const std::string& msg) { write(Level::info, "info", msg); }
inline void warn(const std::string& msg) { write(Level::warn, "warn", msg); }
inline void error(const std::string& msg) { write(Level::error, "error", msg); }

} // namespace qdsps::log
