#include "setquant/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace setquant {

std::string facet_name(const Facet& f) {
  return "x" + std::to_string(f.dim) + (f.upper ? "-upper" : "-lower");
}

void check_system(const ScenarioSystem& sys) {
  if (sys.state_box.dim() == 0)
    throw std::invalid_argument("system needs a non-empty state box");
  if (sys.facets.size() != 2 * sys.state_box.dim())
    throw std::invalid_argument("facet list must have 2n entries");
  if (!sys.transition) throw std::invalid_argument("system has no transition");
  if (!(sys.omega_bar >= 0.0) || !std::isfinite(sys.omega_bar))
    throw std::invalid_argument("omega_bar must be finite and >= 0");
  if (!(sys.dt > 0.0)) throw std::invalid_argument("dt must be > 0");
  if (!(sys.one_step_bound >= 0.0))
    throw std::invalid_argument("one-step bound must be >= 0");
  for (const auto& a : sys.adversarial) {
    if (!sys.action_box.contains(a, 1e-12))
      throw std::invalid_argument("adversarial action outside action box");
  }
}

namespace {

DisturbancePoint draw_disturbance(const ScenarioSystem& sys, Rng& rng) {
  if (sys.omega_bar == 0.0) return DisturbancePoint(sys.disturbance_dim, 0.0);
  DisturbancePoint w(sys.disturbance_dim);
  for (auto& x : w) x = rng.uniform(-sys.omega_bar, sys.omega_bar);
  return w;
}

std::vector<DisturbancePoint> disturbance_corners(const ScenarioSystem& sys) {
  if (sys.omega_bar == 0.0 || sys.disturbance_dim == 0)
    return {DisturbancePoint(sys.disturbance_dim, 0.0)};
  std::vector<double> lo(sys.disturbance_dim, -sys.omega_bar);
  std::vector<double> hi(sys.disturbance_dim, sys.omega_bar);
  return discretize_box(BoxRegion(lo, hi), 2);
}

}  // namespace

double probe_one_step_bound(const ScenarioSystem& sys, std::size_t probes,
                            std::uint64_t seed) {
  Rng rng(seed);
  double worst = 0.0;
  for (std::size_t k = 0; k < probes; ++k) {
    const auto s = rng.point_in(sys.state_box);
    const auto u = rng.point_in(sys.action_box);
    const auto w = draw_disturbance(sys, rng);
    const auto out = step(sys, s, u, w);
    worst = std::max(worst, linf_distance(s, out.next));
  }
  return worst;
}

ScenarioSystem restrict_to(const ScenarioSystem& sys, const BoxRegion& box) {
  if (box.dim() != sys.dim())
    throw DimensionError("restricted box dimension mismatch");
  ScenarioSystem out = sys;
  out.state_box = box;
  return out;
}

StepOutcome step(const ScenarioSystem& sys, const StatePoint& state,
                 const ActionPoint& action, const DisturbancePoint& dist) {
  const auto& box = sys.state_box;
  if (state.size() != box.dim()) throw DimensionError("state dimension");
  if (action.size() != sys.action_box.dim())
    throw DimensionError("action dimension");
  if (dist.size() != sys.disturbance_dim)
    throw DimensionError("disturbance dimension");
  if (!box.contains(state, 1e-9))
    throw std::invalid_argument("step: state outside the state box");
  if (!sys.action_box.contains(action, 1e-9))
    throw std::invalid_argument("step: action outside the action box");
  for (double w : dist) {
    if (std::abs(w) > sys.omega_bar + 1e-12)
      throw std::invalid_argument("step: disturbance exceeds omega_bar");
  }

  StepOutcome out;
  out.next = sys.transition(state, action, dist);
  if (out.next.size() != box.dim())
    throw DimensionError("transition returned wrong dimension");

  std::optional<Facet> first_truncated;
  for (std::size_t i = 0; i < box.dim(); ++i) {
    std::optional<Facet> crossed;
    if (out.next[i] < box.lower(i)) crossed = Facet{i, false};
    else if (out.next[i] > box.upper(i)) crossed = Facet{i, true};
    if (!crossed) continue;
    if (sys.facet_class(*crossed) == FacetClass::Unsafe) {
      out.classification = StepClass::Unsafe;
      out.facet = crossed;
      return out;
    }
    if (!first_truncated) first_truncated = crossed;
  }
  if (first_truncated) {
    out.next = box.clamp(out.next);
    out.classification = StepClass::Truncated;
    out.facet = first_truncated;
  }
  return out;
}

// --- Policy ----------------------------------------------------------------

Policy Policy::uniform(BoxRegion box) {
  Policy p;
  p.kind_ = Kind::UniformBox;
  p.box_ = std::move(box);
  return p;
}

Policy Policy::finite(std::vector<ActionPoint> actions) {
  if (actions.empty()) throw std::invalid_argument("empty action set");
  Policy p;
  p.kind_ = Kind::FiniteSet;
  p.actions_ = std::move(actions);
  return p;
}

Policy Policy::function(std::function<ActionPoint(const StatePoint&)> fn) {
  Policy p;
  p.kind_ = Kind::Function;
  p.fn_ = std::move(fn);
  return p;
}

bool Policy::deterministic() const {
  switch (kind_) {
    case Kind::UniformBox: return box_.dim() == 0;
    case Kind::FiniteSet: return actions_.size() == 1;
    case Kind::Function: return true;
  }
  return false;
}

ActionPoint Policy::draw(const StatePoint& state, Rng& rng) const {
  switch (kind_) {
    case Kind::UniformBox: return rng.point_in(box_);
    case Kind::FiniteSet:
      return actions_.size() == 1 ? actions_.front()
                                  : actions_[rng.index(actions_.size())];
    case Kind::Function: return fn_(state);
  }
  return {};
}

Trajectory run_scenario(const ScenarioSystem& sys, const StatePoint& start,
                        std::size_t K, const Policy& policy, Rng& rng) {
  if (K < 2) throw std::invalid_argument("run_scenario: K must be >= 2");
  if (!sys.state_box.contains(start, 1e-9))
    throw std::invalid_argument("run_scenario: start outside state box");
  Trajectory t;
  t.states.reserve(K);
  t.actions.reserve(K - 1);
  t.states.push_back(start);
  for (std::size_t k = 1; k < K; ++k) {
    auto u = policy.draw(t.states.back(), rng);
    const auto w = draw_disturbance(sys, rng);
    auto out = step(sys, t.states.back(), u, w);
    t.actions.push_back(std::move(u));
    t.states.push_back(std::move(out.next));
    if (out.classification == StepClass::Unsafe) {
      t.exit = ExitKind::Unsafe;
      t.facet = out.facet;
      break;
    }
    if (out.classification == StepClass::Truncated) ++t.truncations;
  }
  return t;
}

// --- subject vehicle laws -----------------------------------------------------

double idm_accel(const IdmParams& p, double v0, double v1, double p10) {
  if (!(p10 > 0.0)) throw std::invalid_argument("idm_accel: gap must be > 0");
  const double dynamic =
      v0 * p.headway + v0 * (v0 - v1) / (2.0 * std::sqrt(p.a_max * p.b));
  const double s_star = p.s0 + std::max(0.0, dynamic);
  const double a = p.a_max * (1.0 - std::pow(v0 / p.v_des, 4) -
                              (s_star / p10) * (s_star / p10));
  return std::clamp(a, p.a_lo, p.a_hi);
}

double brake_to_stop_accel(double v0) { return v0 > 0.0 ? -10.0 : 0.0; }

// --- adversarial actions ------------------------------------------------------

std::vector<ActionPoint> discretize_box(const BoxRegion& box,
                                        std::size_t per_axis) {
  if (per_axis < 1) throw std::invalid_argument("per_axis must be >= 1");
  const std::size_t n = box.dim();
  std::vector<std::vector<double>> axes(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (per_axis == 1) {
      axes[i] = {0.5 * (box.lower(i) + box.upper(i))};
      continue;
    }
    for (std::size_t k = 0; k < per_axis; ++k) {
      const double t = static_cast<double>(k) / static_cast<double>(per_axis - 1);
      axes[i].push_back(k + 1 == per_axis ? box.upper(i)
                                          : box.lower(i) + t * box.width(i));
    }
  }
  std::vector<ActionPoint> out;
  std::vector<std::size_t> idx(n, 0);
  for (;;) {
    ActionPoint p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = axes[i][idx[i]];
    out.push_back(std::move(p));
    std::size_t d = 0;
    while (d < n && ++idx[d] == axes[d].size()) idx[d++] = 0;
    if (d == n) break;
  }
  return out;
}

double unsafe_signed_distance(const ScenarioSystem& sys,
                              std::span<const double> p) {
  const auto& box = sys.state_box;
  const bool any_unsafe =
      std::find(sys.facets.begin(), sys.facets.end(), FacetClass::Unsafe) !=
      sys.facets.end();
  double d = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < box.dim(); ++i) {
    if (!any_unsafe || sys.facet_class({i, false}) == FacetClass::Unsafe)
      d = std::max(d, box.lower(i) - p[i]);
    if (!any_unsafe || sys.facet_class({i, true}) == FacetClass::Unsafe)
      d = std::max(d, p[i] - box.upper(i));
  }
  return d;
}

std::vector<ActionPoint> adversarial_action_set(const ScenarioSystem& sys) {
  if (sys.adversarial.empty())
    throw std::logic_error("system " + sys.name +
                           " declares no closed-form adversarial set");
  return sys.adversarial;
}

ActionPoint adversarial_action(const ScenarioSystem& sys,
                               const StatePoint& state, std::size_t per_axis) {
  const auto candidates = discretize_box(sys.action_box, per_axis);
  const auto disturbances = disturbance_corners(sys);
  ActionPoint best;
  double best_score = -std::numeric_limits<double>::infinity();
  for (const auto& u : candidates) {
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& w : disturbances) {
      const auto next = sys.transition(state, u, w);
      worst = std::min(worst, unsafe_signed_distance(sys, next));
    }
    if (worst > best_score) {
      best_score = worst;
      best = u;
    }
  }
  return best;
}

Policy adversarial_policy(const ScenarioSystem& sys, std::size_t per_axis) {
  return Policy::function([sys, per_axis](const StatePoint& s) {
    return adversarial_action(sys, s, per_axis);
  });
}

}  // namespace setquant
