#include "setquant/validation.hpp"

#include <cmath>
#include <stdexcept>

#include "setquant/parallel.hpp"

namespace setquant {

std::size_t sample_size_probabilistic(double epsilon, double beta) {
  if (!(epsilon > 0.0 && epsilon <= 1.0))
    throw std::invalid_argument("epsilon must lie in (0, 1]");
  if (!(beta > 0.0 && beta < 1.0))
    throw std::invalid_argument("beta must lie in (0, 1)");
  if (epsilon == 1.0) return 1;
  const double ratio = std::log(beta) / std::log1p(-epsilon);
  const double n = std::ceil(ratio - 1e-9);
  return n < 1.0 ? 1 : static_cast<std::size_t>(n);
}

std::size_t sample_size_resolution(double volume, double delta, std::size_t n) {
  if (!(volume > 0.0) || !(delta > 0.0) || n == 0)
    throw std::invalid_argument("sample_size_resolution: positive arguments");
  const double cells = volume / std::pow(2.0 * delta, static_cast<double>(n));
  return static_cast<std::size_t>(std::ceil(cells - 1e-9));
}

std::uint64_t rollout_seed(std::uint64_t master, std::size_t index) {
  return derive_seed(master, 2 * static_cast<std::uint64_t>(index));
}

std::uint64_t start_seed(std::uint64_t master, std::size_t index) {
  return derive_seed(master, 2 * static_cast<std::uint64_t>(index) + 1);
}

namespace {

struct Sample {
  bool failed = false;
  Counterexample cex;
};

// Runs samples in index order, stopping after the first failing chunk.
// The earliest failing index wins regardless of the worker count.
template <typename Fn>
ValidationVerdict run_batched(std::size_t N, unsigned workers, Fn&& sample) {
  ValidationVerdict v;
  const std::size_t chunk = workers <= 1 ? 1 : std::size_t{workers} * 8;
  std::vector<Sample> results;
  for (std::size_t base = 0; base < N; base += chunk) {
    const std::size_t m = std::min(chunk, N - base);
    results.assign(m, Sample{});
    parallel_for(m, workers, [&](std::size_t j) { results[j] = sample(base + j); });
    for (std::size_t j = 0; j < m; ++j) {
      if (results[j].failed) {
        v.result = false;
        v.samples_used = base + j + 1;
        v.counterexample = std::move(results[j].cex);
        return v;
      }
    }
  }
  v.samples_used = N;
  return v;
}

void fill_confidence(ValidationVerdict& v, const SamplingOptions& opts) {
  if (opts.epsilon) v.epsilon = *opts.epsilon;
  if (opts.beta) v.beta = *opts.beta;
  if (opts.epsilon && opts.beta)
    v.under_sampled = opts.N < sample_size_probabilistic(*opts.epsilon, *opts.beta);
}

}  // namespace

ValidationVerdict validate_delta(const ScenarioSystem& sys,
                                 const DeltaCover& cover, std::size_t K,
                                 const Policy& policy) {
  if (!policy.deterministic())
    throw std::invalid_argument("validate_delta needs a deterministic policy");
  if (sys.omega_bar > 0.0)
    throw std::invalid_argument("validate_delta needs omega_bar == 0");
  ValidationVerdict v;
  v.delta = cover.radius();
  const auto ordinals = cover.active_ordinals();
  for (std::size_t j = 0; j < ordinals.size(); ++j) {
    const auto& start = cover.center(ordinals[j]);
    Rng rng(rollout_seed(0, j));
    auto t = run_scenario(sys, start, K, policy, rng);
    t.start_cell = ordinals[j];
    t.seed = rollout_seed(0, j);
    bool bad = t.exit == ExitKind::Unsafe;
    for (std::size_t k = 1; !bad && k < t.states.size(); ++k)
      bad = cover.distance(t.states[k]) > cover.radius();
    if (bad) {
      v.result = false;
      v.samples_used = j + 1;
      v.counterexample = Counterexample{j, t.seed, start, std::move(t)};
      return v;
    }
  }
  v.samples_used = ordinals.size();
  return v;
}

ValidationVerdict validate_eps(const ScenarioSystem& sys, const BoxRegion& phi,
                               const Policy& policy,
                               const SamplingOptions& opts) {
  if (phi.dim() != sys.dim()) throw DimensionError("phi dimension mismatch");
  auto v = run_batched(opts.N, opts.workers, [&](std::size_t i) {
    Rng pick(start_seed(opts.seed, i));
    const auto start = pick.point_in(phi);
    const auto seed = rollout_seed(opts.seed, i);
    Rng rng(seed);
    Sample s;
    auto t = run_scenario(sys, start, opts.K, policy, rng);
    t.seed = seed;
    bool bad = t.exit == ExitKind::Unsafe;
    for (std::size_t k = 1; !bad && k < t.states.size(); ++k)
      bad = !phi.contains(t.states[k]);
    if (bad) {
      s.failed = true;
      s.cex = Counterexample{i, seed, start, std::move(t)};
    }
    return s;
  });
  fill_confidence(v, opts);
  return v;
}

ValidationVerdict validate_eps_delta(
    const ScenarioSystem& sys, const DeltaCover& cover, const Policy& policy,
    const SamplingOptions& opts,
    const std::function<bool(std::span<const double>)>& band) {
  std::vector<std::size_t> starts;
  for (auto ord : cover.active_ordinals()) {
    if (!band || band(cover.center(ord))) starts.push_back(ord);
  }
  ValidationVerdict v;
  if (!starts.empty()) {
    v = run_batched(opts.N, opts.workers, [&](std::size_t i) {
      Rng pick(start_seed(opts.seed, i));
      const auto ord = starts[pick.index(starts.size())];
      const auto& start = cover.center(ord);
      const auto seed = rollout_seed(opts.seed, i);
      Rng rng(seed);
      Sample s;
      auto t = run_scenario(sys, start, opts.K, policy, rng);
      t.seed = seed;
      t.start_cell = ord;
      bool bad = t.exit == ExitKind::Unsafe;
      for (std::size_t k = 1; !bad && k < t.states.size(); ++k)
        bad = cover.distance(t.states[k]) > cover.radius();
      if (bad) {
        s.failed = true;
        s.cex = Counterexample{i, seed, start, std::move(t)};
      }
      return s;
    });
  }
  v.delta = cover.radius();
  fill_confidence(v, opts);
  return v;
}

Trajectory replay_counterexample(const ScenarioSystem& sys,
                                 const Counterexample& cex, std::size_t K,
                                 const Policy& policy) {
  Rng rng(cex.seed);
  auto t = run_scenario(sys, cex.start, K, policy, rng);
  t.seed = cex.seed;
  return t;
}

}  // namespace setquant
