#pragma once

#include <string>

namespace freshlink::log {

enum class Level { Error = 0, Warn = 1, Info = 2, Debug = 3 };

/// Threshold comes from the FRESHLINK_LOG environment variable
/// (error|warn|info|debug), default warn.
Level threshold();

void write(Level level, const std::string& message);

inline void error(const std::string& m) { write(Level::Error, m); }
inline void warn(const std::string& m) { write(Level::Warn, m); }
inline void info(const std::string& m) { write(Level::Info, m); }
inline void debug(const std::string& m) { write(Level::Debug, m); }

}  // namespace freshlink::log
