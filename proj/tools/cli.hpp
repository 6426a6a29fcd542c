#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "georeward/scoring.hpp"

namespace georeward::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitUsage = 2;

/// Settings shared by every subcommand after merging, lowest to highest
/// precedence: built-in defaults, config file, environment, flags.
struct CliConfig {
  EngineConfig engine;
  std::string host = "127.0.0.1";
  int port = 8080;
  bool strict = false;
  std::uint64_t seed = 0;
  std::size_t parallel = 1;
};

nlohmann::json to_json(const CliConfig& config);

/// Reads a key = value config file (TOML/INI syntax, optional [section]
/// headers which are ignored) into `config`. Throws std::invalid_argument on
/// unknown keys or bad values.
void apply_config_file(const std::string& path, CliConfig& config);

/// GEOREWARD_HOST and GEOREWARD_PORT.
void apply_environment(CliConfig& config);

/// Entry point shared by the executable and the tests.
int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace georeward::cli
