#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "setquant/scenario.hpp"

namespace setquant {

std::string sv_policy_name(SvPolicy p) {
  return p == SvPolicy::BrakeToStop ? "brake" : "idm";
}

SvPolicy parse_sv_policy(const std::string& name) {
  if (name == "brake") return SvPolicy::BrakeToStop;
  if (name == "idm") return SvPolicy::Idm;
  throw std::invalid_argument("unknown sv policy '" + name +
                              "' (expected brake or idm)");
}

namespace {

constexpr std::size_t kConstructionProbes = 2000;

void verify_bound(const ScenarioSystem& sys) {
  check_system(sys);
  const double seen = probe_one_step_bound(sys, kConstructionProbes, 0x5eed);
  if (seen > sys.one_step_bound + 1e-9)
    throw std::logic_error(sys.name + ": observed one-step displacement " +
                           std::to_string(seen) + " exceeds bound " +
                           std::to_string(sys.one_step_bound));
}

// IDM sees the bumper gap: spacing beyond the collision distance. Fed the
// raw spacing, its rest gap s0 would sit inside the unsafe region.
std::function<double(double, double, double)> sv_law(SvPolicy policy,
                                                     double v_des,
                                                     double collision_gap) {
  if (policy == SvPolicy::BrakeToStop)
    return [](double v0, double, double) { return brake_to_stop_accel(v0); };
  IdmParams params;
  params.v_des = v_des;
  return [params, collision_gap](double v0, double v1, double spacing) {
    return idm_accel(params, v0, v1, std::max(spacing - collision_gap, 1e-6));
  };
}

double sv_accel_bound(SvPolicy policy) {
  if (policy == SvPolicy::BrakeToStop) return 10.0;
  const IdmParams p;
  return std::max(std::abs(p.a_lo), std::abs(p.a_hi));
}

double abs_max(double lo, double hi) { return std::max(std::abs(lo), std::abs(hi)); }

ScenarioSystem toy(std::string name, BoxRegion box, double bound,
                   TransitionFn fn) {
  ScenarioSystem sys;
  sys.name = std::move(name);
  sys.state_box = std::move(box);
  sys.facets.assign(2 * sys.state_box.dim(), FacetClass::Unsafe);
  sys.action_box = BoxRegion({}, {});
  sys.disturbance_dim = 0;
  sys.one_step_bound = bound;
  sys.dt = 1.0;
  sys.sv_policy = "none";
  sys.transition = std::move(fn);
  sys.adversarial = {ActionPoint{}};
  return sys;
}

}  // namespace

ScenarioSystem make_lead_follow(const VehicleConfig& config) {
  ScenarioSystem sys;
  sys.name = "lead_follow";
  sys.state_box = config.state_box.value_or(
      BoxRegion({0.0, 0.0, 5.5}, {16.0, 16.0, 60.0}));
  sys.action_box = config.action_box.value_or(BoxRegion({-5.0}, {3.0}));
  if (sys.state_box.dim() != 3) throw DimensionError("lead_follow state is 3-D");
  if (sys.action_box.dim() != 1)
    throw DimensionError("lead_follow action is 1-D");
  sys.facets = config.facets.value_or(std::vector<FacetClass>{
      FacetClass::Truncate, FacetClass::Truncate, FacetClass::Truncate,
      FacetClass::Truncate, FacetClass::Unsafe, FacetClass::Truncate});
  sys.disturbance_dim = 1;
  sys.omega_bar = config.omega_bar;
  sys.dt = config.dt;
  sys.sv_policy = sv_policy_name(config.sv_policy);

  const double dt = sys.dt;
  const auto law = sv_law(config.sv_policy, sys.state_box.upper(0),
                          sys.state_box.lower(2));
  sys.transition = [law, dt](const StatePoint& s, const ActionPoint& u,
                             const DisturbancePoint& w) {
    const double v0 = s[0], v1 = s[1], p10 = s[2];
    const double a0 = law(v0, v1, p10);
    return StatePoint{std::max(0.0, v0 + a0 * dt),
                      std::max(0.0, v1 + (u[0] + w[0]) * dt),
                      p10 + (v1 - v0) * dt};
  };

  const auto& b = sys.state_box;
  const double dp = std::max(b.upper(1) - b.lower(0), b.upper(0) - b.lower(1));
  const double du =
      abs_max(sys.action_box.lower(0), sys.action_box.upper(0)) + sys.omega_bar;
  sys.one_step_bound =
      dt * std::max({sv_accel_bound(config.sv_policy), du, dp});
  // Lead braking as hard as allowed.
  sys.adversarial = {ActionPoint{sys.action_box.lower(0)}};
  verify_bound(sys);
  return sys;
}

ScenarioSystem make_three_vehicle(const VehicleConfig& config) {
  ScenarioSystem sys;
  sys.name = "three_vehicle";
  sys.state_box = config.state_box.value_or(BoxRegion(
      {0.0, 0.0, 0.0, 5.0, -25.0}, {6.0, 6.0, 6.0, 25.0, -5.0}));
  sys.action_box =
      config.action_box.value_or(BoxRegion({-5.0, -7.0}, {3.0, -3.0}));
  if (sys.state_box.dim() != 5)
    throw DimensionError("three_vehicle state is 5-D");
  if (sys.action_box.dim() != 2)
    throw DimensionError("three_vehicle action is 2-D");
  std::vector<FacetClass> facets(10, FacetClass::Truncate);
  facets[2 * 3] = FacetClass::Unsafe;      // p10 lower
  facets[2 * 4 + 1] = FacetClass::Unsafe;  // p20 upper
  sys.facets = config.facets.value_or(facets);
  sys.disturbance_dim = 2;
  sys.omega_bar = config.omega_bar;
  sys.dt = config.dt;
  sys.sv_policy = sv_policy_name(config.sv_policy);

  const double dt = sys.dt;
  const auto law = sv_law(config.sv_policy, sys.state_box.upper(0),
                          sys.state_box.lower(3));
  sys.transition = [law, dt](const StatePoint& s, const ActionPoint& u,
                             const DisturbancePoint& w) {
    const double v0 = s[0], v1 = s[1], v2 = s[2];
    const double a0 = law(v0, v1, s[3]);
    return StatePoint{std::max(0.0, v0 + a0 * dt),
                      std::max(0.0, v1 + (u[0] + w[0]) * dt),
                      std::max(0.0, v2 + (u[1] + w[1]) * dt),
                      s[3] + (v1 - v0) * dt, s[4] + (v2 - v0) * dt};
  };

  const auto& b = sys.state_box;
  double dp = 0.0;
  for (std::size_t k : {1u, 2u})
    dp = std::max({dp, b.upper(k) - b.lower(0), b.upper(0) - b.lower(k)});
  double du = 0.0;
  for (std::size_t k = 0; k < 2; ++k)
    du = std::max(du, abs_max(sys.action_box.lower(k), sys.action_box.upper(k)));
  du += sys.omega_bar;
  sys.one_step_bound =
      dt * std::max({sv_accel_bound(config.sv_policy), du, dp});
  // Lead brakes hardest, rear vehicle brakes least.
  sys.adversarial = {
      ActionPoint{sys.action_box.lower(0), sys.action_box.upper(1)}};
  verify_bound(sys);
  return sys;
}

ScenarioSystem make_toy_shift() {
  return toy("toy_shift", BoxRegion({0.0}, {3.0}), 1.0,
             [](const StatePoint& s, const ActionPoint&,
                const DisturbancePoint&) { return StatePoint{s[0] + 1.0}; });
}

ScenarioSystem make_toy_shrink(std::optional<BoxRegion> action_box) {
  const BoxRegion gamma = action_box.value_or(BoxRegion({}, {}));
  if (gamma.dim() > 1) throw DimensionError("toy_shrink action is scalar");
  auto sys = toy("toy_shrink", BoxRegion({-1.0}, {1.0}), 0.0,
                 [](const StatePoint& s, const ActionPoint& u,
                    const DisturbancePoint& w) {
                   double x = 0.5 * s[0];
                   if (!u.empty()) x += u[0];
                   if (!w.empty()) x += w[0];
                   return StatePoint{x};
                 });
  sys.action_box = gamma;
  sys.disturbance_dim = gamma.dim();
  sys.one_step_bound =
      0.5 + (gamma.dim() ? abs_max(gamma.lower(0), gamma.upper(0)) : 0.0);
  sys.adversarial.clear();
  if (gamma.dim() == 0) sys.adversarial = {ActionPoint{}};
  return sys;
}

ScenarioSystem make_toy_threshold() {
  return toy("toy_threshold", BoxRegion({0.0}, {10.0}), 5.0,
             [](const StatePoint& s, const ActionPoint&,
                const DisturbancePoint&) {
               return StatePoint{s[0] < 1.0 ? s[0] - 5.0 : s[0]};
             });
}

ScenarioSystem make_toy_two_basins() {
  return toy("toy_two_basins", BoxRegion({-10.0}, {10.0}), 100.0,
             [](const StatePoint& s, const ActionPoint&,
                const DisturbancePoint&) {
               return StatePoint{std::abs(s[0]) < 1.0 ? s[0] + 100.0 : s[0]};
             });
}

ScenarioSystem make_flip() {
  return toy("flip", BoxRegion({-1.0}, {1.0}), 2.0,
             [](const StatePoint& s, const ActionPoint&,
                const DisturbancePoint&) { return StatePoint{-s[0]}; });
}

ScenarioSystem make_identity(BoxRegion box) {
  return toy("identity", std::move(box), 0.0,
             [](const StatePoint& s, const ActionPoint&,
                const DisturbancePoint&) { return s; });
}

}  // namespace setquant
