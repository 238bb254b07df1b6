#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "setquant/config.hpp"
#include "setquant/oracle.hpp"
#include "setquant/quantification.hpp"

namespace setquant {

enum ExitCode : int { kExitTrue = 0, kExitFalse = 1, kExitUsage = 2 };

struct DispatchOptions {
  unsigned workers = 1;
  /// Adds wall_time to the report (which then stops being reproducible).
  bool timing = false;
  /// Takes precedence over SETQUANT_OUTPUT and the config's output_dir.
  std::optional<std::string> output_dir;
};

/// Directory the artifacts go to: flag, then SETQUANT_OUTPUT, then config.
std::string resolve_output_dir(const RunConfig& config,
                               const DispatchOptions& options);

/// Action policy implied by the config (adversarial set or uniform on Gamma).
Policy make_policy(const ScenarioSystem& sys, const RunConfig& config);

/// Runs the configured algorithm and writes report.json plus the matching
/// cells.csv / oracle.csv, slices.csv and (opt-in) trajectories.ndjson.
/// Returns the process exit code. Usage problems throw ConfigError.
int dispatch(const RunConfig& config, const DispatchOptions& options,
             std::ostream& log);

/// Per-axis layer counts and volumes of a mask over a lattice grid.
void write_slices_csv(std::ostream& os, const DeltaCover& grid,
                      const std::vector<char>& mask,
                      const std::string& digest = {});

void write_trajectory_ndjson(std::ostream& os, const Trajectory& t);

class CompareError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Compares two output directories (each holding report.json and either
/// cells.csv or oracle.csv). Returns the comparison as pretty JSON text.
std::string compare_runs(const std::string& dir_a, const std::string& dir_b,
                         bool force);

}  // namespace setquant
