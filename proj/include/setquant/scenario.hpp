#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "setquant/geometry.hpp"
#include "setquant/rng.hpp"

namespace setquant {

enum class FacetClass { Unsafe, Truncate };

/// One face of the state box: axis `dim`, lower or upper side.
struct Facet {
  std::size_t dim = 0;
  bool upper = false;
  bool operator==(const Facet&) const = default;
};

std::string facet_name(const Facet& f);

enum class StepClass { Inside, Truncated, Unsafe };

struct StepOutcome {
  StatePoint next;
  StepClass classification = StepClass::Inside;
  std::optional<Facet> facet;
};

using TransitionFn = std::function<StatePoint(
    const StatePoint&, const ActionPoint&, const DisturbancePoint&)>;

/*
 * A testable system: the state box with a safety label per face, the
 * admissible action box, bounded additive disturbances and the update map.
 * The subject vehicle's own policy lives inside `transition`.
 */
struct ScenarioSystem {
  std::string name;
  BoxRegion state_box;
  std::vector<FacetClass> facets;  // index 2*i = lower face of axis i
  BoxRegion action_box;
  std::size_t disturbance_dim = 0;
  double omega_bar = 0.0;
  double one_step_bound = 0.0;
  double dt = 0.1;
  std::string sv_policy;
  TransitionFn transition;
  /// Closed-form adversarial action set, when one is known.
  std::vector<ActionPoint> adversarial;

  std::size_t dim() const { return state_box.dim(); }
  FacetClass facet_class(const Facet& f) const {
    return facets[2 * f.dim + (f.upper ? 1 : 0)];
  }
};

/// Throws std::invalid_argument when the facet list, bounds or transition
/// are inconsistent.
void check_system(const ScenarioSystem& sys);

/// Largest one-step l-infinity displacement seen over `probes` random
/// (state, action, disturbance) triples.
double probe_one_step_bound(const ScenarioSystem& sys, std::size_t probes,
                            std::uint64_t seed);

/// Same system with a smaller state box; each face keeps the class of the
/// parent face on the same axis and side.
ScenarioSystem restrict_to(const ScenarioSystem& sys, const BoxRegion& box);

StepOutcome step(const ScenarioSystem& sys, const StatePoint& state,
                 const ActionPoint& action, const DisturbancePoint& dist);

/*
 * How scenario actions are chosen at each step.
 */
class Policy {
 public:
  enum class Kind { UniformBox, FiniteSet, Function };

  static Policy uniform(BoxRegion box);
  static Policy finite(std::vector<ActionPoint> actions);
  static Policy function(std::function<ActionPoint(const StatePoint&)> fn);

  Kind kind() const { return kind_; }
  /// Same action for the same state, no randomness consumed.
  bool deterministic() const;
  ActionPoint draw(const StatePoint& state, Rng& rng) const;
  const std::vector<ActionPoint>& actions() const { return actions_; }

 private:
  Kind kind_ = Kind::UniformBox;
  BoxRegion box_;
  std::vector<ActionPoint> actions_;
  std::function<ActionPoint(const StatePoint&)> fn_;
};

enum class ExitKind { None, Unsafe };

struct Trajectory {
  std::vector<StatePoint> states;
  std::vector<ActionPoint> actions;
  ExitKind exit = ExitKind::None;
  std::optional<Facet> facet;
  std::size_t truncations = 0;
  std::optional<std::size_t> start_cell;
  std::uint64_t seed = 0;
};

/// K-state rollout (K-1 steps), stopping early on an unsafe exit.
Trajectory run_scenario(const ScenarioSystem& sys, const StatePoint& start,
                        std::size_t K, const Policy& policy, Rng& rng);

// Subject-vehicle laws.
struct IdmParams {
  double v_des = 16.0;
  double headway = 1.5;  // T
  double s0 = 2.0;
  double a_max = 0.73;
  double b = 1.67;
  double a_lo = -4.67;
  double a_hi = 0.73;
};

double idm_accel(const IdmParams& p, double v0, double v1, double p10);
double brake_to_stop_accel(double v0);

/// Grid over the box with `per_axis` points per axis (corners included).
std::vector<ActionPoint> discretize_box(const BoxRegion& box,
                                        std::size_t per_axis);

/// Signed distance of p to the unsafe faces only (all faces if none is
/// unsafe): positive once p is beyond one of them.
double unsafe_signed_distance(const ScenarioSystem& sys,
                              std::span<const double> p);

/// Closed-form adversarial set when the system declares one; otherwise the
/// per-state argmax over a discretized action box is required instead.
std::vector<ActionPoint> adversarial_action_set(const ScenarioSystem& sys);

/// argmax over discretize_box(Gamma, per_axis) of the worst case over
/// disturbance corners of unsafe_signed_distance(f(state, u, w)).
ActionPoint adversarial_action(const ScenarioSystem& sys,
                               const StatePoint& state,
                               std::size_t per_axis = 11);

/// Deterministic policy wrapping adversarial_action.
Policy adversarial_policy(const ScenarioSystem& sys, std::size_t per_axis = 11);

// ---------------------------------------------------------------------------
// Built-in systems.

enum class SvPolicy { BrakeToStop, Idm };

std::string sv_policy_name(SvPolicy p);
SvPolicy parse_sv_policy(const std::string& name);

struct VehicleConfig {
  std::optional<BoxRegion> state_box;
  std::optional<BoxRegion> action_box;
  std::optional<std::vector<FacetClass>> facets;
  SvPolicy sv_policy = SvPolicy::BrakeToStop;
  double dt = 0.1;
  double omega_bar = 0.0;
};

/// State (v0, v1, p10): subject vehicle 0 follows lead vehicle 1.
ScenarioSystem make_lead_follow(const VehicleConfig& config = {});
/// State (v0, v1, v2, p10, p20): vehicle 1 ahead, vehicle 2 behind.
ScenarioSystem make_three_vehicle(const VehicleConfig& config = {});

// 1-D toy systems with both faces unsafe.
ScenarioSystem make_toy_shift();  // s' = s + 1 on [0, 3]
ScenarioSystem make_toy_shrink(std::optional<BoxRegion> action_box = {});
ScenarioSystem make_toy_threshold();    // s' = s - 5 if s < 1 on [0, 10]
ScenarioSystem make_toy_two_basins();   // s' = s + 100 if |s| < 1
ScenarioSystem make_flip();             // s' = -s on [-1, 1]
ScenarioSystem make_identity(BoxRegion box);

}  // namespace setquant
