#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "mosquito/control.hpp"
#include "mosquito/forward.hpp"
#include "mosquito/model.hpp"
#include "mosquito/verify.hpp"

namespace mosquito {

/// Malformed or invalid configuration; path() is the JSON path of the
/// offending key, e.g. "bounds.sigma2".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& message)
      : std::runtime_error(path + ": " + message), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

/// Everything a run needs, resolved from one JSON document.
struct RunConfig {
  nlohmann::json source;
  ProblemData<double> data;
  MortalityModel mortality;
  FertilityModel fertility;
  ForwardConfig<double> forward;
  SweepConfig<double> sweep;
  TrialRanges trials;
};

/// Parses a config document. Relative CSV paths resolve against base_dir.
/// Throws ConfigError on unknown keys, wrong types, or values outside their
/// domain; hypothesis checks are left to validate_params.
RunConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

/// JSON schema of the accepted config keys.
nlohmann::json config_schema();

/// 64-bit FNV-1a over the canonical (sorted, compact) dump of the document.
std::uint64_t config_digest(const nlohmann::json& doc);

}  // namespace mosquito
