#pragma once

// JSON run configuration. Keys carry their units (carrier_ghz, sigma2_dbm, ...)
// and are normalized to SI on load; omitted keys take the default system
// parameters. Unknown keys are errors.

#include <stdexcept>
#include <string>

#include "nfisac/experiment_harness.hpp"

namespace nfisac {

/// Malformed or invalid configuration. `key()` names the offending entry
/// (dotted path), or is empty for whole-document problems.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& message)
      : std::runtime_error(message), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

/// Single-point scenario used by `estimate` and `optimize-beamformer`.
struct Scenario {
  double radius_m = 0.5;
  double d_m = 10.0;
  double theta_rad = 0.7;
  std::uint64_t seed = 1;
};

struct RunConfig {
  SweepConfig sweep;
  Scenario scenario;
  std::string output_path;  // empty: subcommand default
  int verbosity = 0;
};

RunConfig default_run_config();
RunConfig parse_config_text(const std::string& json_text);
RunConfig parse_config_file(const std::string& path);

/// Fully resolved configuration in the same keyed units as the input.
std::string serialize_config(const RunConfig& config);

/// Re-validates after command-line overrides have been applied.
void validate_run_config(const RunConfig& config);

/// Accepts a number (dBm) or a string such as "-74 dBm", "-104 dBW" or "4e-11 W".
double parse_power_to_watts(const std::string& text, const std::string& key);

}  // namespace nfisac
