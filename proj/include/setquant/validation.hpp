#pragma once

#include <cstdint>
#include <limits>
#include <optional>

#include "setquant/geometry.hpp"
#include "setquant/scenario.hpp"

namespace setquant {

/// A failing rollout. Replaying it means calling run_scenario from `start`
/// with Rng(seed); the result is bit-identical.
struct Counterexample {
  std::size_t index = 0;  // sample index within the run
  std::uint64_t seed = 0;
  StatePoint start;
  Trajectory trajectory;
};

struct ValidationVerdict {
  bool result = true;
  std::size_t samples_used = 0;
  std::optional<Counterexample> counterexample;
  double epsilon = std::numeric_limits<double>::quiet_NaN();
  double beta = std::numeric_limits<double>::quiet_NaN();
  double delta = std::numeric_limits<double>::quiet_NaN();
  /// N was below the bound implied by (epsilon, beta).
  bool under_sampled = false;
};

/// Smallest N with (1 - eps)^N <= beta.
std::size_t sample_size_probabilistic(double epsilon, double beta);

/// Number of delta-cells needed to tile the given volume.
std::size_t sample_size_resolution(double volume, double delta, std::size_t n);

struct SamplingOptions {
  std::size_t N = 0;
  std::size_t K = 2;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  /// Claimed confidence parameters, used only for the under-sampled flag.
  std::optional<double> epsilon;
  std::optional<double> beta;
};

/// Rolls out from every active center in order; deterministic policy and
/// omega_bar == 0 are required.
ValidationVerdict validate_delta(const ScenarioSystem& sys,
                                 const DeltaCover& cover, std::size_t K,
                                 const Policy& policy);

/// N rollouts from i.i.d. uniform starts in phi; fails if a state leaves
/// phi or the system exits through an unsafe face.
ValidationVerdict validate_eps(const ScenarioSystem& sys, const BoxRegion& phi,
                               const Policy& policy,
                               const SamplingOptions& opts);

/// N rollouts from uniformly drawn active centers; membership is
/// cover distance <= radius. `band` restricts starts to centers it accepts.
ValidationVerdict validate_eps_delta(
    const ScenarioSystem& sys, const DeltaCover& cover, const Policy& policy,
    const SamplingOptions& opts,
    const std::function<bool(std::span<const double>)>& band = {});

/// Re-executes a logged counterexample.
Trajectory replay_counterexample(const ScenarioSystem& sys,
                                 const Counterexample& cex, std::size_t K,
                                 const Policy& policy);

/// Stream layout shared by the samplers: per-sample seeds come from the
/// master seed; start choices use a second, independent stream.
std::uint64_t rollout_seed(std::uint64_t master, std::size_t index);
std::uint64_t start_seed(std::uint64_t master, std::size_t index);

}  // namespace setquant
