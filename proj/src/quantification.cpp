#include "setquant/quantification.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "setquant/parallel.hpp"

namespace setquant {

void Hyper::validate() const {
  if (!(epsilon > 0.0 && epsilon <= 1.0))
    throw std::invalid_argument("epsilon must lie in (0, 1]");
  if (!(beta > 0.0 && beta < 1.0))
    throw std::invalid_argument("beta must lie in (0, 1)");
  if (!(delta0 > 0.0)) throw std::invalid_argument("delta0 must be > 0");
  if (!(gamma > 0.0 && gamma < 1.0))
    throw std::invalid_argument("gamma must lie in (0, 1)");
  if (!(delta_min > 0.0)) throw std::invalid_argument("delta_min must be > 0");
  if (delta_min > delta0)
    throw std::invalid_argument("delta_min must not exceed delta0");
  if (K < 2) throw std::invalid_argument("K must be >= 2");
  if (N < 1) throw std::invalid_argument("N must be >= 1");
  if (!(min_feature_scale >= 0.0))
    throw std::invalid_argument("min_feature_scale must be >= 0");
}

double cost(const DeltaCover& cover, const BoxRegion& gamma) {
  return -volume_estimate(cover) * gamma.volume();
}

// --- reach graph ------------------------------------------------------------

void ReachGraph::ensure_vertex(std::size_t v) {
  if (v >= parents_.size()) parents_.resize(v + 1);
}

bool ReachGraph::add_edge(std::size_t from, std::size_t to) {
  ensure_vertex(std::max(from, to));
  auto& p = parents_[to];
  if (std::find(p.begin(), p.end(), from) != p.end()) return false;
  p.push_back(from);
  ++edges_;
  return true;
}

std::vector<std::size_t> reachable_closure(const ReachGraph& g, std::size_t v) {
  if (!g.has_vertex(v)) throw std::out_of_range("reachable_closure: unknown vertex");
  std::vector<char> seen(g.vertex_count(), 0);
  std::vector<std::size_t> stack{v}, out;
  seen[v] = 1;
  while (!stack.empty()) {
    const auto x = stack.back();
    stack.pop_back();
    out.push_back(x);
    for (auto p : g.parents(x)) {
      if (!seen[p]) {
        seen[p] = 1;
        stack.push_back(p);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

// --- prioritized sampling ---------------------------------------------------

std::vector<double> prioritized_weights(const std::vector<double>& distances,
                                        double power) {
  if (distances.empty()) throw std::invalid_argument("no centers to weight");
  if (!(power >= 1.0)) throw std::invalid_argument("priority power must be >= 1");
  const auto [lo, hi] = std::minmax_element(distances.begin(), distances.end());
  const double uniform = 1.0 / static_cast<double>(distances.size());
  if (*lo == *hi) return std::vector<double>(distances.size(), uniform);
  const double dstar = *hi;
  std::vector<double> w(distances.size());
  double total = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = std::pow(dstar - distances[i], power);
    total += w[i];
  }
  for (auto& x : w) x /= total;
  return w;
}

std::vector<double> prioritized_weights(const std::vector<StatePoint>& centers,
                                        const PointCloud& pruned, double power) {
  std::vector<double> d;
  d.reserve(centers.size());
  for (const auto& c : centers) d.push_back(pruned.min_distance(c));
  return prioritized_weights(d, power);
}

// --- QuantState ---------------------------------------------------------------

QuantState::QuantState(const BoxRegion& sigma, const Hyper& hyper,
                       const SpeOptions& options)
    : sigma_(sigma),
      hyper_(hyper),
      options_(options),
      cover_(build_cover(sigma, hyper.delta0)),
      pruned_(sigma.lower(), hyper.delta0),
      replay_(options.replay_memory_cap),
      delta_(hyper.delta0),
      n_eps_(sample_size_probabilistic(hyper.epsilon, hyper.beta)) {
  hyper_.validate();
  if (cover_.size() > 0) graph_.ensure_vertex(cover_.size() - 1);
  dist_to_pruned_.assign(cover_.size(), std::numeric_limits<double>::infinity());
}

void QuantState::rebuild_sampling() const {
  if (!sampling_dirty_) return;
  live_ = cover_.active_ordinals();
  cumulative_.clear();
  if (options_.prioritized && !live_.empty()) {
    std::vector<double> d;
    d.reserve(live_.size());
    for (auto o : live_) d.push_back(dist_to_pruned_[o]);
    const auto w = prioritized_weights(d, options_.priority_power);
    cumulative_.resize(w.size());
    std::partial_sum(w.begin(), w.end(), cumulative_.begin());
  }
  sampling_dirty_ = false;
}

std::size_t QuantState::pick_start(std::uint64_t seed, std::size_t index) const {
  rebuild_sampling();
  if (live_.empty()) throw EmptyCoverError();
  Rng rng(start_seed(seed, index));
  if (cumulative_.empty()) return live_[rng.index(live_.size())];
  const double u = rng.uniform() * cumulative_.back();
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  if (it == cumulative_.end()) --it;
  return live_[static_cast<std::size_t>(it - cumulative_.begin())];
}

void QuantState::on_vertex_added(std::size_t v) {
  graph_.ensure_vertex(v);
  if (dist_to_pruned_.size() <= v)
    dist_to_pruned_.resize(v + 1, std::numeric_limits<double>::infinity());
  dist_to_pruned_[v] = pruned_.min_distance(cover_.center(v));
}

void QuantState::prune(std::size_t start) {
  const StatePoint s0 = cover_.center(start);
  for (auto v : reachable_closure(graph_, start)) {
    if (cover_.is_active(v)) {
      cover_.deactivate(v);
      ++n_pruned_;
    }
  }
  pruned_.insert(s0);
  for (std::size_t i = 0; i < cover_.size(); ++i)
    dist_to_pruned_[i] = std::min(dist_to_pruned_[i], linf_distance(cover_.center(i), s0));
}

bool QuantState::absorb(std::size_t start, const std::vector<StatePoint>& states,
                        bool unsafe_exit) {
  if (start >= cover_.size() || !cover_.is_active(start)) return false;
  bool event = false;
  const bool may_discover = pruned_.min_distance(cover_.center(start)) > delta_;
  // The last state of an unsafe rollout lies outside the state box.
  const std::size_t inside = unsafe_exit ? states.size() - 1 : states.size();
  if (may_discover) {
    for (std::size_t k = 1; k < inside; ++k) {
      if (cover_.distance(states[k]) <= delta_) continue;
      const auto before = cover_.size();
      const auto v = cover_.add(states[k]);
      if (v != before) continue;  // exact duplicate of a discarded vertex
      on_vertex_added(v);
      graph_.add_edge(start, v);
      ++n_discovered_;
      event = true;
    }
  }
  if (unsafe_exit) {
    prune(start);
    event = true;
  }
  if (event) {
    stable_ = 0;
    sampling_dirty_ = true;
  }
  return event;
}

bool QuantState::absorb_fresh(std::size_t start, const Trajectory& t) {
  ++n_fresh_;
  const bool unsafe = t.exit == ExitKind::Unsafe;
  if (options_.replay) replay_.push(StoredRollout{start, unsafe, t.states});
  const bool event = absorb(start, t.states, unsafe);
  if (!event) ++stable_;
  return event;
}

bool QuantState::absorb_replayed(const StoredRollout& r) {
  if (!r.states.empty()) n_replayed_ += r.states.size() - 1;
  return absorb(r.start_ordinal, r.states, r.unsafe_exit);
}

void QuantState::decay() {
  const double next = hyper_.gamma * delta_;
  cover_ = refine_cover(cover_, hyper_.gamma, pruned_.points(), next);
  delta_ = next;
  pruned_.set_bucket_width(delta_);
  const auto old = dist_to_pruned_.size();
  if (cover_.size() > 0) graph_.ensure_vertex(cover_.size() - 1);
  dist_to_pruned_.resize(cover_.size());
  for (std::size_t i = old; i < cover_.size(); ++i)
    dist_to_pruned_[i] = pruned_.min_distance(cover_.center(i));
  ++n_decays_;
  stable_ = 0;
  sampling_dirty_ = true;
  if (options_.replay) replay_apply(replay_, *this);
}

std::size_t replay_apply(const ReplayBuffer& buffer, QuantState& state) {
  std::size_t events = 0;
  buffer.for_each([&](const StoredRollout& r) {
    if (state.absorb_replayed(r)) ++events;
  });
  return events;
}

// --- helpers ------------------------------------------------------------------

namespace {

void finish_report(RunReport& r, const DeltaCover& cover, const BoxRegion& gamma) {
  r.final_delta = cover.radius();
  r.cell_count = cover.active_count();
  r.volume = volume_estimate(cover);
  r.cost = cost(cover, gamma);
}

Trajectory rollout(const ScenarioSystem& sys, const StatePoint& start,
                   std::size_t K, const Policy& policy, std::uint64_t seed) {
  Rng rng(seed);
  auto t = run_scenario(sys, start, K, policy, rng);
  t.seed = seed;
  return t;
}

void check_feature_scale(const Hyper& h, std::size_t n, RunReport& r) {
  const double cell = std::pow(h.delta0 / 2.0, static_cast<double>(n));
  if (h.min_feature_scale == 0.0) {
    r.warnings.push_back(
        "min_feature_scale not declared; delta0 smallness is unverified");
  } else if (cell > h.min_feature_scale) {
    r.warnings.push_back("(delta0/2)^n = " + std::to_string(cell) +
                         " exceeds min_feature_scale " +
                         std::to_string(h.min_feature_scale));
  }
}

}  // namespace

// --- vanilla sampling ---------------------------------------------------------

QuantResult quantify_vanilla(const ScenarioSystem& sys, const Policy& policy,
                             const Hyper& hyper, std::uint64_t seed,
                             const VanillaOptions& options) {
  hyper.validate();
  const auto& sigma = sys.state_box;
  const auto n_eps = sample_size_probabilistic(hyper.epsilon, hyper.beta);
  QuantResult out{DeltaCover(sigma, hyper.delta0), sys.action_box, {}, {}};
  RunReport& r = out.report;
  r.algorithm = "qnt-vs";
  r.seed = seed;
  r.hyper = hyper;

  for (std::size_t attempt = 0; attempt < hyper.N; ++attempt) {
    BoxRegion sub = sigma;
    if (!(attempt == 0 && options.propose_full_first)) {
      Rng rng(derive_seed(seed, 4 * attempt));
      std::vector<double> lo(sigma.dim()), hi(sigma.dim());
      bool degenerate = false;
      for (std::size_t i = 0; i < sigma.dim(); ++i) {
        const double a = rng.uniform(sigma.lower(i), sigma.upper(i));
        const double b = rng.uniform(sigma.lower(i), sigma.upper(i));
        lo[i] = std::min(a, b);
        hi[i] = std::max(a, b);
        degenerate = degenerate || !(lo[i] < hi[i]);
      }
      if (degenerate) continue;
      sub = BoxRegion(lo, hi);
    }
    const auto candidate = build_cover(sub, hyper.delta0);
    SamplingOptions so;
    so.N = n_eps;
    so.K = hyper.K;
    so.seed = derive_seed(seed, 4 * attempt + 1);
    so.workers = options.workers;
    const auto v = validate_eps_delta(sys, candidate, policy, so);
    r.n_fresh_samples += v.samples_used;
    if (v.result) {
      for (const auto& c : candidate.centers()) out.cover.add(c);
      r.success = true;
      break;
    }
  }
  r.converged = r.success;
  finish_report(r, out.cover, out.gamma);
  return out;
}

// --- delta pruning ------------------------------------------------------------

QuantResult quantify_delta_pruning(const ScenarioSystem& sys,
                                   const Policy& policy, const Hyper& hyper,
                                   std::uint64_t seed) {
  hyper.validate();
  QuantResult out{build_cover(sys.state_box, hyper.delta0), sys.action_box, {}, {}};
  RunReport& r = out.report;
  r.algorithm = "qnt-dp";
  r.seed = seed;
  r.hyper = hyper;
  auto& cover = out.cover;
  auto live = cover.active_ordinals();
  for (std::size_t n = 0; n < hyper.N && !live.empty(); ++n) {
    Rng pick(start_seed(seed, n));
    const auto start = live[pick.index(live.size())];
    const auto t = rollout(sys, cover.center(start), hyper.K, policy,
                           rollout_seed(seed, n));
    ++r.n_fresh_samples;
    bool bad = t.exit == ExitKind::Unsafe;
    for (std::size_t k = 1; !bad && k < t.states.size(); ++k)
      bad = cover.distance(t.states[k]) > cover.radius();
    if (bad) {
      cover.deactivate(start);
      ++r.n_pruned;
      live = cover.active_ordinals();
    }
  }
  r.converged = true;
  finish_report(r, cover, out.gamma);
  return out;
}

// --- adaptive exploration -------------------------------------------------------

QuantResult quantify_adaptive(const ScenarioSystem& sys, const Policy& policy,
                              const Hyper& hyper, std::uint64_t seed,
                              const AdaptiveOptions& options) {
  hyper.validate();
  const auto& sigma = sys.state_box;
  const auto n_eps = sample_size_probabilistic(hyper.epsilon, hyper.beta);
  Rng restarts(derive_seed(seed, 0xae));
  double delta = hyper.delta0;

  auto fresh_cover = [&](StatePoint p) {
    DeltaCover c(sigma, delta);
    c.add(std::move(p));
    return c;
  };
  DeltaCover cover =
      fresh_cover(options.seed_point ? *options.seed_point : restarts.point_in(sigma));

  RunReport r;
  r.algorithm = "qnt-ae";
  r.seed = seed;
  r.hyper = hyper;
  std::size_t stable = 0;
  std::size_t n = 0;
  for (;;) {
    if (stable >= n_eps) {
      if (hyper.gamma * delta < hyper.delta_min * (1.0 - 1e-9)) {
        r.converged = true;
        break;
      }
      delta *= hyper.gamma;
      cover.set_radius(delta);
      ++r.n_decays;
      stable = 0;
      continue;
    }
    if (n >= hyper.N) break;
    Rng pick(start_seed(seed, n));
    const auto& start = cover.center(pick.index(cover.size()));
    const auto t = rollout(sys, start, hyper.K, policy, rollout_seed(seed, n));
    ++n;
    bool event = false;
    for (std::size_t k = 1; k < t.states.size(); ++k) {
      if (t.exit == ExitKind::Unsafe && k + 1 == t.states.size()) {
        cover = fresh_cover(restarts.point_in(sigma));
        ++r.n_restarts;
        event = true;
        break;
      }
      if (cover.distance(t.states[k]) > delta) {
        cover.add(t.states[k]);
        ++r.n_discovered;
        event = true;
      }
    }
    stable = event ? 0 : stable + 1;
  }
  r.n_fresh_samples = n;

  QuantResult out{r.converged ? std::move(cover) : DeltaCover(sigma, delta),
                  sys.action_box, r, {}};
  if (!out.report.converged)
    out.report.warnings.push_back("adaptive exploration did not converge");
  finish_report(out.report, out.cover, out.gamma);
  return out;
}

// --- synchronous pruning and exploration ------------------------------------------

QuantResult quantify_spe(const ScenarioSystem& sys, const Policy& policy,
                         const Hyper& hyper, std::uint64_t seed,
                         const SpeOptions& options) {
  hyper.validate();
  QuantState st(sys.state_box, hyper, options);
  RunReport r;
  r.algorithm = "qnt-spe";
  r.seed = seed;
  r.hyper = hyper;
  check_feature_scale(hyper, sys.dim(), r);
  std::vector<Trajectory> kept;

  const unsigned workers = std::max(1u, options.workers);
  std::vector<std::size_t> starts;
  std::vector<Trajectory> batch;
  for (;;) {
    if (st.stable()) {
      if (hyper.gamma * st.delta() < hyper.delta_min * (1.0 - 1e-9)) {
        r.converged = true;
        break;
      }
      st.decay();
      continue;
    }
    if (st.cover().empty()) {
      // Nothing left to sample: the empty set is the answer.
      r.converged = true;
      break;
    }
    if (st.n_fresh() >= hyper.N) break;

    // Speculative batch: every start is drawn from the current state, and
    // results after the first event are discarded, so the outcome matches
    // the one-at-a-time loop exactly.
    const std::size_t base = st.n_fresh();
    std::size_t m = 1;
    if (workers > 1) {
      m = std::min<std::size_t>({std::size_t{workers} * 4, hyper.N - base,
                                 st.n_eps() - st.stability_counter()});
    }
    starts.resize(m);
    for (std::size_t j = 0; j < m; ++j) starts[j] = st.pick_start(seed, base + j);
    batch.assign(m, Trajectory{});
    parallel_for(m, workers, [&](std::size_t j) {
      batch[j] = rollout(sys, st.cover().center(starts[j]), hyper.K, policy,
                         rollout_seed(seed, base + j));
      batch[j].start_cell = starts[j];
    });
    for (std::size_t j = 0; j < m; ++j) {
      const bool event = st.absorb_fresh(starts[j], batch[j]);
      if (options.keep_trajectories) kept.push_back(std::move(batch[j]));
      if (event) break;
    }
  }

  r.n_fresh_samples = st.n_fresh();
  r.n_replayed = st.n_replayed();
  r.n_decays = st.n_decays();
  r.n_pruned = st.n_pruned();
  r.n_discovered = st.n_discovered();
  QuantResult out{st.cover(), sys.action_box, r, std::move(kept)};
  finish_report(out.report, out.cover, out.gamma);
  return out;
}

}  // namespace setquant
