#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "setquant/geometry.hpp"
#include "setquant/replay_buffer.hpp"
#include "setquant/scenario.hpp"
#include "setquant/validation.hpp"

namespace setquant {

struct Hyper {
  double epsilon = 0.01;
  double beta = 0.1;
  double delta0 = 1.0;
  double gamma = 0.5;
  double delta_min = 0.25;
  std::size_t K = 10;
  std::size_t N = 100000;
  /// Smallest invariant component volume the user expects; 0 = undeclared.
  double min_feature_scale = 0.0;

  /// Throws std::invalid_argument on out-of-domain values.
  void validate() const;
  bool operator==(const Hyper&) const = default;
};

struct RunReport {
  std::string algorithm;
  std::uint64_t seed = 0;
  Hyper hyper;
  bool converged = false;
  bool success = false;  // vanilla: a validated region was found
  std::size_t n_fresh_samples = 0;
  std::size_t n_replayed = 0;
  std::size_t n_decays = 0;
  std::size_t n_pruned = 0;
  std::size_t n_discovered = 0;
  std::size_t n_restarts = 0;
  double final_delta = 0.0;
  std::size_t cell_count = 0;
  double volume = 0.0;
  double cost = 0.0;
  std::vector<std::string> warnings;
};

struct QuantResult {
  DeltaCover cover;
  BoxRegion gamma;
  RunReport report;
  /// Fresh rollouts, kept only when requested.
  std::vector<Trajectory> trajectories;
};

/// -|cover| * |Gamma|; a 0-dimensional Gamma has unit measure.
double cost(const DeltaCover& cover, const BoxRegion& gamma);

// --- reach graph ------------------------------------------------------------

/// Directed discovery edges between cover ordinals.
class ReachGraph {
 public:
  void ensure_vertex(std::size_t v);
  bool has_vertex(std::size_t v) const { return v < parents_.size(); }
  std::size_t vertex_count() const { return parents_.size(); }
  std::size_t edge_count() const { return edges_; }
  /// Adds from -> to once; returns false for a duplicate.
  bool add_edge(std::size_t from, std::size_t to);
  const std::vector<std::size_t>& parents(std::size_t v) const {
    return parents_.at(v);
  }

 private:
  std::vector<std::vector<std::size_t>> parents_;
  std::size_t edges_ = 0;
};

/// v together with every vertex that has a directed path to v, ascending.
std::vector<std::size_t> reachable_closure(const ReachGraph& g, std::size_t v);

// --- prioritized sampling ---------------------------------------------------

/// rho_i proportional to (d* - d_i)^power; uniform when all d_i are equal.
std::vector<double> prioritized_weights(const std::vector<double>& distances,
                                        double power = 1.0);
/// Distances from the centers to the nearest pruned point, then as above.
std::vector<double> prioritized_weights(const std::vector<StatePoint>& centers,
                                        const PointCloud& pruned,
                                        double power = 1.0);

// --- SPE state ----------------------------------------------------------------

struct SpeOptions {
  bool prioritized = false;
  double priority_power = 1.0;
  bool replay = false;
  std::size_t replay_memory_cap = 8192;
  unsigned workers = 1;
  bool keep_trajectories = false;
};

/*
 * The evolving state of the synchronous pruning-and-exploration loop. All
 * mutation goes through absorb() and decay() so that live sampling, replay
 * and tests apply the same rules.
 */
class QuantState {
 public:
  QuantState(const BoxRegion& sigma, const Hyper& hyper,
             const SpeOptions& options);

  const DeltaCover& cover() const { return cover_; }
  const PointCloud& pruned() const { return pruned_; }
  const ReachGraph& graph() const { return graph_; }
  const ReplayBuffer& replay() const { return replay_; }
  double delta() const { return delta_; }
  std::size_t stability_counter() const { return stable_; }
  std::size_t n_eps() const { return n_eps_; }
  std::size_t n_fresh() const { return n_fresh_; }
  std::size_t n_replayed() const { return n_replayed_; }
  std::size_t n_decays() const { return n_decays_; }
  std::size_t n_pruned() const { return n_pruned_; }
  std::size_t n_discovered() const { return n_discovered_; }
  bool stable() const { return stable_ >= n_eps_; }

  /// Start vertex for fresh sample `index` (uniform or prioritized).
  std::size_t pick_start(std::uint64_t seed, std::size_t index) const;

  /// Applies one fresh rollout from `start`; returns true on an event.
  bool absorb_fresh(std::size_t start, const Trajectory& t);
  /// Shrinks delta by gamma and refines the cover; replays if enabled.
  void decay();

  /// Applies one stored rollout without counting it as a fresh sample.
  bool absorb_replayed(const StoredRollout& r);

 private:
  bool absorb(std::size_t start, const std::vector<StatePoint>& states,
              bool unsafe_exit);
  void prune(std::size_t start);
  void on_vertex_added(std::size_t v);
  void rebuild_sampling() const;

  BoxRegion sigma_;
  Hyper hyper_;
  SpeOptions options_;
  DeltaCover cover_;
  PointCloud pruned_;
  ReachGraph graph_;
  ReplayBuffer replay_;
  double delta_;
  std::size_t n_eps_;
  std::size_t stable_ = 0;
  std::size_t n_fresh_ = 0;
  std::size_t n_replayed_ = 0;
  std::size_t n_decays_ = 0;
  std::size_t n_pruned_ = 0;
  std::size_t n_discovered_ = 0;

  // Distance of each ordinal to the pruned set, kept current.
  std::vector<double> dist_to_pruned_;
  mutable bool sampling_dirty_ = true;
  mutable std::vector<std::size_t> live_;
  mutable std::vector<double> cumulative_;
};

/// Re-absorbs every stored rollout; returns the number of events.
std::size_t replay_apply(const ReplayBuffer& buffer, QuantState& state);

// --- algorithms ---------------------------------------------------------------

struct VanillaOptions {
  /// Attempt the whole state box before random sub-boxes.
  bool propose_full_first = false;
  unsigned workers = 1;
};

QuantResult quantify_vanilla(const ScenarioSystem& sys, const Policy& policy,
                             const Hyper& hyper, std::uint64_t seed,
                             const VanillaOptions& options = {});

QuantResult quantify_delta_pruning(const ScenarioSystem& sys,
                                   const Policy& policy, const Hyper& hyper,
                                   std::uint64_t seed);

struct AdaptiveOptions {
  std::optional<StatePoint> seed_point;
};

QuantResult quantify_adaptive(const ScenarioSystem& sys, const Policy& policy,
                              const Hyper& hyper, std::uint64_t seed,
                              const AdaptiveOptions& options = {});

QuantResult quantify_spe(const ScenarioSystem& sys, const Policy& policy,
                         const Hyper& hyper, std::uint64_t seed,
                         const SpeOptions& options = {});

}  // namespace setquant
