// Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any FAIL.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>

#include "setquant/config.hpp"
#include "setquant/dispatch.hpp"
#include "setquant/oracle.hpp"
#include "setquant/quantification.hpp"
#include "setquant/validation.hpp"

using namespace setquant;
namespace fs = std::filesystem;

namespace {

// Tolerances.
constexpr double kOracleSymDiff = 0.02;     // AC2, fraction of oracle volume
constexpr double kSeedSeconds = 300.0;      // AC2, per seed
constexpr double kVanillaRatio = 3.0;       // AC5c
constexpr double kSpeedupFloor = 2.0;       // AC7
constexpr double kThreeVehicleDelta = 0.75; // AC4, see README

int failures = 0;

void report(const char* id, bool ok, const std::string& detail) {
  std::printf("%s %s %s\n", id, ok ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Hyper lead_follow_hyper() {
  Hyper h;
  h.epsilon = 0.01;
  h.beta = 0.1;
  h.delta0 = 4;
  h.gamma = 0.5;
  h.delta_min = 1;
  h.K = 40;
  h.N = 2000000;
  return h;
}

Hyper toy_hyper(double delta0, double delta_min, std::size_t N = 200000) {
  Hyper h;
  h.delta0 = delta0;
  h.delta_min = delta_min;
  h.K = 10;
  h.N = N;
  return h;
}

Policy plain(const ScenarioSystem& sys) { return Policy::uniform(sys.action_box); }

OracleSet toy_oracle(const ScenarioSystem& sys, double delta) {
  return brute_force_invariant(sys, build_cover(sys.state_box, delta),
                               default_action_samples(sys.action_box),
                               default_disturbance_samples(sys));
}

// Clipped cell volume of the masked lattice cells passing the filter.
double masked_volume(const DeltaCover& g, const std::vector<char>& m,
                     const std::function<bool(const StatePoint&)>& keep = {}) {
  const auto& b = g.domain();
  const double r = g.radius();
  double v = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!m[i]) continue;
    const auto& c = g.center(i);
    if (keep && !keep(c)) continue;
    double x = 1;
    for (std::size_t d = 0; d < b.dim(); ++d)
      x *= std::min(c[d] + r, b.upper(d)) - std::max(c[d] - r, b.lower(d));
    v += x;
  }
  return v;
}

double extreme_center(const DeltaCover& g, std::size_t axis, bool top) {
  double e = top ? -1e300 : 1e300;
  for (const auto& c : g.centers()) e = top ? std::max(e, c[axis]) : std::min(e, c[axis]);
  return e;
}

// --- AC1 ---------------------------------------------------------------------

void ac1() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t n = sample_size_probabilistic(0.001, 0.01);
  bool monotone = true;
  for (int i = 1; i <= 20; ++i)
    for (int j = 1; j <= 20; ++j) {
      const double e = 0.0005 * i, b = 0.01 * j;
      const auto here = sample_size_probabilistic(e, b);
      if (i < 20 && sample_size_probabilistic(0.0005 * (i + 1), b) > here) monotone = false;
      if (j < 20 && sample_size_probabilistic(e, 0.01 * (j + 1)) > here) monotone = false;
    }
  const double t = seconds_since(t0);
  report("AC1", n == 4603 && monotone && t < 1.0,
         fmt("N(0.001,0.01)=%zu monotone=%d t=%.3fs", n, monotone, t));
}

// --- AC2 / AC3 ---------------------------------------------------------------

// Largest drop of the minimal safe gap along an axis where it should rise.
struct ColumnCheck {
  double worst_v0_drop = 0;  // min p10 should not fall as v0 grows
  double worst_v1_rise = 0;  // min p10 should not grow as v1 grows
};

ColumnCheck check_columns(const DeltaCover& g, const std::vector<char>& m) {
  std::map<std::pair<double, double>, double> min_gap;
  const double none = g.domain().upper(2) + 2 * g.radius();
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto& c = g.center(i);
    auto [it, fresh] = min_gap.try_emplace({c[0], c[1]}, none);
    if (m[i]) it->second = std::min(it->second, c[2]);
  }
  std::vector<double> v0s, v1s;
  for (const auto& [k, _] : min_gap) {
    v0s.push_back(k.first);
    v1s.push_back(k.second);
  }
  std::sort(v0s.begin(), v0s.end());
  v0s.erase(std::unique(v0s.begin(), v0s.end()), v0s.end());
  std::sort(v1s.begin(), v1s.end());
  v1s.erase(std::unique(v1s.begin(), v1s.end()), v1s.end());
  ColumnCheck out;
  for (std::size_t a = 0; a < v0s.size(); ++a)
    for (std::size_t b = 0; b < v1s.size(); ++b) {
      const double here = min_gap.at({v0s[a], v1s[b]});
      if (a + 1 < v0s.size())
        out.worst_v0_drop = std::max(out.worst_v0_drop, here - min_gap.at({v0s[a + 1], v1s[b]}));
      if (b + 1 < v1s.size())
        out.worst_v1_rise = std::max(out.worst_v1_rise, min_gap.at({v0s[a], v1s[b + 1]}) - here);
    }
  return out;
}

void ac2_ac3() {
  const auto sys = make_lead_follow();
  const auto grid = build_cover(sys.state_box, 1.0);
  const auto oracle = brute_force_invariant(sys, grid, sys.adversarial, {{0.0}},
                                            {.steps_per_transition = 40});
  const double cell = 2 * grid.radius();
  int ok2 = 0, ok3 = 0;
  std::string d2, d3;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = quantify_spe(sys, Policy::finite(sys.adversarial), lead_follow_hyper(), seed);
    const double t = seconds_since(t0);
    const auto mask = rasterize(r.cover, grid);
    const auto cmp = compare_sets(grid, mask, oracle.mask);
    const double frac = cmp.sym_diff_volume / cmp.volume_b;
    ok2 += r.report.converged && frac <= kOracleSymDiff && t <= kSeedSeconds;
    d2 += fmt(" s%llu=%.2f%%/%.1fs", (unsigned long long)seed, 100 * frac, t);

    const auto cols = check_columns(grid, mask);
    ok3 += cols.worst_v0_drop <= cell + 1e-9 && cols.worst_v1_rise <= cell + 1e-9;
    d3 += fmt(" s%llu=(%.0f,%.0f)", (unsigned long long)seed, cols.worst_v0_drop,
              cols.worst_v1_rise);
  }
  report("AC2", ok2 == 5, fmt("%d/5 seeds within %.0f%% of oracle:", ok2, 100 * kOracleSymDiff) + d2);
  report("AC3", ok3 == 5,
         fmt("%d/5 seeds monotone up to one cell (%.0f m); worst (v0 drop, v1 rise):", ok3, cell) +
             d3);
}

// --- AC4 ---------------------------------------------------------------------

void ac4() {
  const auto t0 = std::chrono::steady_clock::now();
  double lf[2], rear[2], lead[2];
  int k = 0;
  for (auto pol : {SvPolicy::BrakeToStop, SvPolicy::Idm}) {
    const auto l = make_lead_follow({.sv_policy = pol});
    const auto lg = build_cover(l.state_box, 1.0);
    const auto lr = quantify_spe(l, Policy::finite(l.adversarial), lead_follow_hyper(), 1);
    lf[k] = masked_volume(lg, rasterize(lr.cover, lg));

    const auto tv = make_three_vehicle({.sv_policy = pol});
    Hyper h = lead_follow_hyper();
    h.delta0 = 4 * kThreeVehicleDelta;
    h.delta_min = kThreeVehicleDelta;
    const auto r = quantify_spe(tv, Policy::finite(tv.adversarial), h, 1);
    const auto g = build_cover(tv.state_box, kThreeVehicleDelta);
    const auto m = rasterize(r.cover, g);
    // Rear-follow slice: lead at its farthest layer. Lead-follow slice: rear
    // vehicle at its farthest layer.
    const double far_lead = extreme_center(g, 3, true), far_rear = extreme_center(g, 4, false);
    rear[k] = masked_volume(g, m, [&](const StatePoint& c) { return c[3] == far_lead; });
    lead[k] = masked_volume(g, m, [&](const StatePoint& c) { return c[4] == far_rear; });
    ++k;
  }
  const double t = seconds_since(t0);
  report("AC4", lf[0] > lf[1] && rear[0] < rear[1] && lead[0] > lead[1] && t <= 1800,
         fmt("lead-follow brake %.0f > idm %.0f; three-vehicle rear slice brake %.1f < idm "
             "%.1f, lead slice brake %.1f > idm %.1f; t=%.1fs",
             lf[0], lf[1], rear[0], rear[1], lead[0], lead[1], t));
}

// --- AC5 ---------------------------------------------------------------------

void ac5() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto thr = make_toy_threshold();
  const auto fine = toy_oracle(thr, 0.05);
  int over = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto r = quantify_delta_pruning(thr, plain(thr), toy_hyper(0.3, 0.3, 2000), seed);
    bool hit = false;
    for (std::size_t i = 0; i < r.cover.size() && !hit; ++i) {
      if (r.cover.is_active(i)) continue;
      for (std::size_t g = 0; g < fine.grid.size(); ++g)
        if (fine.mask[g] &&
            std::abs(fine.grid.center(g)[0] - r.cover.center(i)[0]) <= r.cover.radius())
          hit = true;
    }
    over += hit;
  }

  const auto two = make_toy_two_basins();
  int stays = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto r = quantify_adaptive(two, plain(two), toy_hyper(2.0, 0.25), seed,
                                     {.seed_point = StatePoint{5.0}});
    std::size_t other = 0;
    for (std::size_t i = 0; i < r.cover.size(); ++i)
      if (r.cover.is_active(i) && r.cover.center(i)[0] < 0) ++other;
    stays += !r.cover.empty() && other == 0;
  }

  auto rate = [&](std::size_t N) {
    int ok = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed)
      ok += quantify_vanilla(thr, plain(thr), toy_hyper(2.0, 0.25, N), seed).report.success;
    return ok / 100.0;
  };
  const double a = rate(10), b = rate(100);
  const bool flat = a > 0 && b > 0 && b / a < kVanillaRatio && a / b < kVanillaRatio;
  const double t = seconds_since(t0);
  report("AC5", over == 10 && stays == 10 && flat && t < 120,
         fmt("dp over-prunes %d/10; ae stays in seeded basin %d/10; vanilla success "
             "N=10 %.2f vs N=100 %.2f; t=%.1fs",
             over, stays, a, b, t));
}

// --- AC6 ---------------------------------------------------------------------

// Every oracle lattice point farther than `width` from the oracle boundary
// must agree with the cover.
bool within_one_cell(const QuantResult& r, const OracleSet& o) {
  const double width = 2 * r.report.final_delta;
  std::vector<double> edges;
  for (std::size_t g = 0; g + 1 < o.grid.size(); ++g)
    if (o.mask[g] != o.mask[g + 1])
      edges.push_back(0.5 * (o.grid.center(g)[0] + o.grid.center(g + 1)[0]));
  for (std::size_t g = 0; g < o.grid.size(); ++g) {
    const double x = o.grid.center(g)[0];
    double gap = 1e300;
    for (double e : edges) gap = std::min(gap, std::abs(x - e));
    if (gap <= width) continue;
    const bool covered = r.cover.distance(std::vector<double>{x}) <= r.cover.radius();
    if (covered != (o.mask[g] != 0)) return false;
  }
  return true;
}

void ac6() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto two = make_toy_two_basins();
  const auto thr = make_toy_threshold();
  const auto o_two = toy_oracle(two, 0.05), o_thr = toy_oracle(thr, 0.05);
  int ok_two = 0, ok_thr = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto a = quantify_spe(two, plain(two), toy_hyper(0.5, 0.25), seed);
    ok_two += a.report.converged && within_one_cell(a, o_two);
    const auto b = quantify_spe(thr, plain(thr), toy_hyper(2.0, 0.25), seed);
    ok_thr += b.report.converged && within_one_cell(b, o_thr);
  }
  const double t = seconds_since(t0);
  report("AC6", ok_two == 10 && ok_thr == 10 && t < 120,
         fmt("two_basins %d/10, threshold %d/10 within one final cell; t=%.1fs", ok_two,
             ok_thr, t));
}

// --- AC7 ---------------------------------------------------------------------

void ac7() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto lf = make_lead_follow();
  const Policy star = Policy::finite(lf.adversarial);
  const Policy five = Policy::finite({{-5}, {-3}, {-1}, {1}, {3}});

  const auto cover = build_cover(lf.state_box, 1.0);
  const BoundaryBand band(lf.state_box, lf.one_step_bound);
  int band_same = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SamplingOptions o{.N = 1000, .K = 40, .seed = seed};
    band_same += validate_eps_delta(lf, cover, star, o).result ==
                 validate_eps_delta(lf, cover, star, o, band).result;
  }

  const BoxRegion safe_box({0, 14, 55}, {2, 16, 60}), crash_box({14, 0, 5.5}, {16, 2, 7});
  int gamma_same = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SamplingOptions o{.N = 500, .K = 40, .seed = seed};
    bool same = true;
    for (const auto& b : {safe_box, crash_box}) {
      const auto sys = restrict_to(lf, b);
      const auto c = build_cover(b, 0.5);
      same = same && validate_eps_delta(sys, c, star, o).result ==
                         validate_eps_delta(sys, c, five, o).result;
    }
    gamma_same += same;
  }

  std::vector<double> fs, ff;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    fs.push_back(quantify_spe(lf, star, lead_follow_hyper(), seed).report.n_fresh_samples);
    ff.push_back(quantify_spe(lf, five, lead_follow_hyper(), seed).report.n_fresh_samples);
  }
  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
  };
  const double ms = median(fs), mf = median(ff);
  const double t = seconds_since(t0);
  report("AC7",
         band_same == 20 && gamma_same == 20 && mf >= kSpeedupFloor * ms && t < 600,
         fmt("band verdicts %d/20, gamma* vs 5-point verdicts %d/20; median fresh samples "
             "gamma* %.0f vs 5-point %.0f (ratio %.2f, need >= %.1f); t=%.1fs",
             band_same, gamma_same, ms, mf, mf / ms, kSpeedupFloor, t));
}

// --- AC8 ---------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void ac8() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto root = fs::temp_directory_path() / "setquant_acceptance";
  fs::remove_all(root);
  bool identical = true;
  for (const char* text :
       {"system.name = lead_follow\nalgorithm = qnt-spe\nseed = 7\n",
        "system.name = toy_two_basins\nalgorithm = qnt-spe\nseed = 5\n"
        "options.prioritized = true\noptions.replay = true\n"}) {
    const auto cfg = parse_config(text);
    std::ostringstream log;
    dispatch(cfg, {.workers = 1, .output_dir = (root / "a").string()}, log);
    dispatch(cfg, {.workers = 1, .output_dir = (root / "b").string()}, log);
    identical = identical && slurp(root / "a" / "report.json") == slurp(root / "b" / "report.json") &&
                slurp(root / "a" / "cells.csv") == slurp(root / "b" / "cells.csv");
  }

  bool replay_ok = true;
  for (const auto& sys : {make_toy_threshold(), make_lead_follow()}) {
    Hyper h = sys.dim() == 1 ? toy_hyper(2.0, 0.25) : lead_follow_hyper();
    QuantState st(sys.state_box, h, {.replay = true});
    const Policy pol = plain(sys);
    for (std::size_t i = 0; i < 200 && !st.cover().empty(); ++i) {
      const auto s = st.pick_start(3, i);
      Rng rng(rollout_seed(3, i));
      st.absorb_fresh(s, run_scenario(sys, st.cover().center(s), h.K, pol, rng));
    }
    const auto fresh = st.n_fresh();
    st.decay();
    replay_ok = replay_ok && st.n_fresh() == fresh && st.n_replayed() > 0;
  }

  int replayed = 0, total = 0;
  const auto noisy = make_lead_follow({.omega_bar = 0.3});
  const auto coarse = build_cover(noisy.state_box, 2.0);
  const auto pol = plain(noisy);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SamplingOptions o{.N = 5000, .K = 40, .seed = seed};
    const auto v = validate_eps_delta(noisy, coarse, pol, o);
    if (!v.counterexample) continue;
    ++total;
    const auto again = replay_counterexample(noisy, *v.counterexample, 40, pol);
    replayed += again.states == v.counterexample->trajectory.states &&
                again.exit == v.counterexample->trajectory.exit;
  }
  fs::remove_all(root);
  const double t = seconds_since(t0);
  report("AC8", identical && replay_ok && total == 10 && replayed == total && t < 60,
         fmt("byte-identical reports %d; decay leaves fresh count unchanged %d; "
             "counterexamples replayed %d/%d; t=%.1fs",
             identical, replay_ok, replayed, total, t));
}

}  // namespace

int main() {
  ac1();
  ac2_ac3();
  ac4();
  ac5();
  ac6();
  ac7();
  ac8();
  return failures == 0 ? 0 : 1;
}
