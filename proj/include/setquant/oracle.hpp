#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "setquant/geometry.hpp"
#include "setquant/scenario.hpp"

namespace setquant {

struct OracleSet {
  DeltaCover grid;
  std::vector<char> mask;  // per grid ordinal
  std::size_t iterations = 0;
};

struct OracleOptions {
  /// Steps simulated per cell transition with the action held fixed.
  std::size_t steps_per_transition = 1;
  std::size_t max_iter = 100000;
  unsigned workers = 1;
};

class OracleDivergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/*
 * Greatest fixed point on the grid: a cell survives iff, for every listed
 * action and disturbance, its center's successor is safe and snaps to a
 * surviving cell. Throws OracleDivergence after max_iter sweeps.
 */
OracleSet brute_force_invariant(const ScenarioSystem& sys,
                                const DeltaCover& grid,
                                const std::vector<ActionPoint>& actions,
                                const std::vector<DisturbancePoint>& disturbances,
                                const OracleOptions& options = {});

/// Corners and midpoints of each axis of the box (3 points per axis).
std::vector<ActionPoint> default_action_samples(const BoxRegion& box);
/// {0} when omega_bar is 0, else the corners of the disturbance box.
std::vector<DisturbancePoint> default_disturbance_samples(
    const ScenarioSystem& sys);

struct SetComparison {
  double sym_diff_volume = 0.0;
  double a_minus_b = 0.0;  // volume
  double b_minus_a = 0.0;
  double jaccard = 1.0;
  double volume_a = 0.0;
  double volume_b = 0.0;
};

/// Set arithmetic on masks over the same grid; volumes are clipped cell
/// volumes. Two empty sets have Jaccard index 1.
SetComparison compare_sets(const DeltaCover& grid, const std::vector<char>& a,
                           const std::vector<char>& b);

/// Cover CSV layout with a trailing 0/1 column for every grid cell.
void write_oracle_csv(std::ostream& os, const OracleSet& oracle,
                      const std::string& digest = {});
OracleSet read_oracle_csv(std::istream& is, const BoxRegion& domain);

}  // namespace setquant
