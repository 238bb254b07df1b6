#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "setquant/geometry.hpp"
#include "setquant/quantification.hpp"
#include "setquant/scenario.hpp"

namespace setquant {

/// Configuration problem with a stable diagnostic code such as E-DOMAIN.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string code, const std::string& message)
      : std::runtime_error(code + ": " + message), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

struct SystemSpec {
  std::string name;
  std::optional<BoxRegion> state_box;
  std::optional<BoxRegion> action_box;
  std::optional<std::vector<FacetClass>> facets;
  std::string sv_policy = "brake";
  /// Validation target; defaults to the state box.
  std::optional<BoxRegion> region;

  bool operator==(const SystemSpec&) const = default;
};

struct RunOptions {
  bool prioritized = false;
  double priority_power = 1.0;
  bool replay = false;
  bool adversarial = false;
  bool boundary_band = false;
  bool trajectories = false;
  bool propose_full_first = false;
  /// Steps per oracle transition; 0 means hyper.K.
  std::size_t oracle_steps = 0;
  std::optional<std::vector<double>> seed_point;

  bool operator==(const RunOptions&) const = default;
};

struct RunConfig {
  SystemSpec system;
  std::string algorithm;
  Hyper hyper;
  double omega_bar = 0.0;
  double dt = 0.1;
  RunOptions options;
  std::uint64_t seed = 0;
  std::string output_dir = "out";

  bool operator==(const RunConfig&) const = default;
};

const std::vector<std::string>& known_algorithms();
const std::vector<std::string>& known_systems();

/// Parses `key = value` lines; values are JSON, bare words are strings and
/// `#` starts a comment. Defaults come from the named system's table.
RunConfig parse_config(const std::string& text);

/// Every field written explicitly, in a fixed order.
std::string serialize_config(const RunConfig& config);

/// FNV-1a over the serialized config without output_dir, as 16 hex digits.
std::string config_digest(const RunConfig& config);
/// Digest of the fields that fix the compared geometry: the system's boxes,
/// faces and dynamics constants plus the final resolution.
std::string comparison_digest(const RunConfig& config);

std::string fnv1a_hex(const std::string& bytes);

/// Instantiates the configured system with its overrides applied.
ScenarioSystem build_system(const RunConfig& config);

}  // namespace setquant
