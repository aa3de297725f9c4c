#pragma once

#include <stdexcept>
#include <string>

#include "freshlink/sim.hpp"

namespace freshlink {

/// Configuration file error naming the offending line and key.
class ConfigError : public std::runtime_error {
  public:
    ConfigError(int line, const std::string& key, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + (key.empty() ? "" : ", key '" + key + "'") +
                             ": " + what),
          line_(line),
          key_(key) {}
    int line() const { return line_; }
    const std::string& key() const { return key_; }

  private:
    int line_;
    std::string key_;
};

/// Strict parse of the line-oriented "key = value" format with optional
/// "[section]" headers. Unknown keys, type mismatches and out-of-range
/// values raise ConfigError; omitted keys keep their defaults (echoed to the
/// log at info level).
SimConfig parse_config(const std::string& text);
SimConfig parse_config_file(const std::string& path);

/// Inverse of parse_config for all representable configs.
std::string render_config(const SimConfig& config);

PolicyKind policy_from_string(const std::string& name);  // throws std::invalid_argument

}  // namespace freshlink
