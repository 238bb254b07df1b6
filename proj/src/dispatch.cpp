#include "setquant/dispatch.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "json.hpp"

namespace setquant {

using ojson = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string resolve_output_dir(const RunConfig& config,
                               const DispatchOptions& options) {
  if (options.output_dir) return *options.output_dir;
  if (const char* env = std::getenv("SETQUANT_OUTPUT"); env && *env) return env;
  return config.output_dir;
}

Policy make_policy(const ScenarioSystem& sys, const RunConfig& config) {
  if (config.options.adversarial) {
    if (!sys.adversarial.empty()) return Policy::finite(sys.adversarial);
    return adversarial_policy(sys);
  }
  return Policy::uniform(sys.action_box);
}

namespace {

ojson box_json(const BoxRegion& b) { return ojson::array({b.lower(), b.upper()}); }

ojson hyper_json(const Hyper& h) {
  return ojson{{"epsilon", h.epsilon},     {"beta", h.beta},
               {"delta0", h.delta0},       {"gamma", h.gamma},
               {"delta_min", h.delta_min}, {"K", h.K},
               {"N", h.N},                 {"min_feature_scale", h.min_feature_scale}};
}

ojson header(const RunConfig& c, const ScenarioSystem& sys) {
  ojson j;
  j["algorithm"] = c.algorithm;
  j["config_digest"] = config_digest(c);
  j["comparison_digest"] = comparison_digest(c);
  j["seed"] = c.seed;
  j["system"] = {{"name", sys.name},
                 {"sv_policy", sys.sv_policy},
                 {"state_box", box_json(sys.state_box)},
                 {"action_box", box_json(sys.action_box)},
                 {"one_step_bound", sys.one_step_bound}};
  j["hyper"] = hyper_json(c.hyper);
  return j;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
}

std::string read_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CompareError("cannot read " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

const char* exit_name(const Trajectory& t) {
  return t.exit == ExitKind::Unsafe ? "unsafe" : "none";
}

void write_cells(const fs::path& dir, const DeltaCover& cover,
                 const std::string& digest) {
  std::ostringstream os;
  write_cover_csv(os, cover, digest);
  write_file(dir / "cells.csv", os.str());
}

// Final set on the lattice of its own resolution, for slices.csv.
void write_slices(const fs::path& dir, const DeltaCover& cover,
                  const std::string& digest) {
  const auto grid = build_cover(cover.domain(), cover.radius());
  std::ostringstream os;
  write_slices_csv(os, grid, rasterize(cover, grid), digest);
  write_file(dir / "slices.csv", os.str());
}

void write_verdict(ojson& j, const ValidationVerdict& v) {
  auto num = [](double x) { return std::isnan(x) ? ojson() : ojson(x); };
  j["result"] = v.result;
  j["n_samples"] = v.samples_used;
  j["epsilon"] = num(v.epsilon);
  j["beta"] = num(v.beta);
  j["delta"] = num(v.delta);
  j["under_sampled"] = v.under_sampled;
  if (v.counterexample) {
    j["counterexample_seed"] = v.counterexample->seed;
    j["counterexample_start"] = v.counterexample->start;
    j["counterexample_index"] = v.counterexample->index;
    const auto& t = v.counterexample->trajectory;
    j["counterexample_exit"] = exit_name(t);
    if (t.facet) j["counterexample_facet"] = facet_name(*t.facet);
  } else {
    j["counterexample_seed"] = nullptr;
    j["counterexample_start"] = nullptr;
  }
}

void write_quant(ojson& j, const RunReport& r) {
  j["converged"] = r.converged;
  if (r.algorithm == "qnt-vs") j["success"] = r.success;
  j["n_fresh_samples"] = r.n_fresh_samples;
  j["n_replayed"] = r.n_replayed;
  j["n_decays"] = r.n_decays;
  j["n_pruned"] = r.n_pruned;
  j["n_discovered"] = r.n_discovered;
  j["n_restarts"] = r.n_restarts;
  j["final_delta"] = r.final_delta;
  j["cell_count"] = r.cell_count;
  j["volume"] = r.volume;
  j["cost"] = r.cost;
  j["warnings"] = r.warnings;
}

}  // namespace

void write_slices_csv(std::ostream& os, const DeltaCover& grid,
                      const std::vector<char>& mask, const std::string& digest) {
  if (!digest.empty()) os << "# config_digest=" << digest << '\n';
  os << "axis,value,cells,volume\n";
  const auto& box = grid.domain();
  const double r = grid.radius();
  for (std::size_t a = 0; a < grid.dim(); ++a) {
    std::map<double, std::pair<std::size_t, double>> layers;
    for (double x : lattice_axis(box.lower(a), box.upper(a), r)) layers[x] = {0, 0.0};
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (!mask[i]) continue;
      const auto& c = grid.center(i);
      double v = 1.0;
      for (std::size_t d = 0; d < grid.dim(); ++d)
        v *= std::min(c[d] + r, box.upper(d)) - std::max(c[d] - r, box.lower(d));
      auto& slot = layers[c[a]];
      ++slot.first;
      slot.second += v;
    }
    for (const auto& [x, cv] : layers)
      os << a << ',' << format_sig9(x) << ',' << cv.first << ','
         << format_sig9(cv.second) << '\n';
  }
}

void write_trajectory_ndjson(std::ostream& os, const Trajectory& t) {
  ojson j;
  j["seed"] = t.seed;
  j["start"] = t.states.empty() ? ojson() : ojson(t.states.front());
  j["states"] = t.states;
  j["actions"] = t.actions;
  j["exit"] = exit_name(t);
  if (t.facet) j["facet"] = facet_name(*t.facet);
  os << j.dump() << '\n';
}

int dispatch(const RunConfig& config, const DispatchOptions& options,
             std::ostream& log) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto sys = build_system(config);
  const auto policy = make_policy(sys, config);
  const fs::path dir = resolve_output_dir(config, options);
  fs::create_directories(dir);
  const auto digest = config_digest(config);
  const auto& alg = config.algorithm;
  const auto& h = config.hyper;
  const unsigned workers = std::max(1u, options.workers);

  ojson report = header(config, sys);
  int code = kExitTrue;
  std::vector<Trajectory> trajectories;

  const BoxRegion region = config.system.region.value_or(sys.state_box);
  const ScenarioSystem target =
      config.system.region ? restrict_to(sys, region) : sys;

  if (alg == "val-delta" || alg == "val-eps" || alg == "val-eps-delta") {
    ValidationVerdict v;
    if (alg == "val-delta") {
      if (!policy.deterministic())
        throw ConfigError("E-DOMAIN",
                          "val-delta needs a deterministic action policy; set "
                          "options.adversarial = true");
      if (sys.omega_bar > 0.0)
        throw ConfigError("E-DOMAIN", "val-delta needs hyper.omega_bar = 0");
      const auto cover = build_cover(region, h.delta0);
      v = validate_delta(target, cover, h.K, policy);
      write_cells(dir, cover, digest);
    } else {
      SamplingOptions so;
      so.N = sample_size_probabilistic(h.epsilon, h.beta);
      so.K = h.K;
      so.seed = config.seed;
      so.workers = workers;
      so.epsilon = h.epsilon;
      so.beta = h.beta;
      if (alg == "val-eps") {
        v = validate_eps(target, region, policy, so);
      } else {
        const auto cover = build_cover(region, h.delta0);
        std::function<bool(std::span<const double>)> band;
        if (config.options.boundary_band)
          band = BoundaryBand(region, std::max(sys.one_step_bound, 1e-12));
        v = validate_eps_delta(target, cover, policy, so, band);
        write_cells(dir, cover, digest);
      }
    }
    write_verdict(report, v);
    if (v.counterexample) trajectories.push_back(v.counterexample->trajectory);
    code = v.result ? kExitTrue : kExitFalse;
    log << alg << ": " << (v.result ? "true" : "false") << " after "
        << v.samples_used << " samples\n";
  } else if (alg == "oracle") {
    const auto grid = build_cover(sys.state_box, h.delta_min);
    OracleOptions oo;
    oo.steps_per_transition = config.options.oracle_steps > 0
                                  ? config.options.oracle_steps
                                  : config.hyper.K;
    oo.workers = workers;
    const auto actions = config.options.adversarial && !sys.adversarial.empty()
                             ? sys.adversarial
                             : default_action_samples(sys.action_box);
    const auto oracle = brute_force_invariant(
        sys, grid, actions, default_disturbance_samples(sys), oo);
    std::ostringstream os;
    write_oracle_csv(os, oracle, digest);
    write_file(dir / "oracle.csv", os.str());
    std::ostringstream ss;
    write_slices_csv(ss, grid, oracle.mask, digest);
    write_file(dir / "slices.csv", ss.str());
    DeltaCover kept(grid.domain(), grid.radius());
    for (std::size_t i = 0; i < grid.size(); ++i)
      if (oracle.mask[i]) kept.add(grid.center(i));
    report["converged"] = true;
    report["iterations"] = oracle.iterations;
    report["steps_per_transition"] = oo.steps_per_transition;
    report["final_delta"] = grid.radius();
    report["cell_count"] = kept.active_count();
    report["volume"] = volume_estimate(kept);
    report["cost"] = cost(kept, sys.action_box);
    log << "oracle: " << kept.active_count() << " of " << grid.size()
        << " cells invariant after " << oracle.iterations << " sweeps\n";
  } else {
    QuantResult res = [&]() {
      if (alg == "qnt-vs") {
        VanillaOptions vo;
        vo.propose_full_first = config.options.propose_full_first;
        vo.workers = workers;
        return quantify_vanilla(sys, policy, h, config.seed, vo);
      }
      if (alg == "qnt-dp") return quantify_delta_pruning(sys, policy, h, config.seed);
      if (alg == "qnt-ae") {
        AdaptiveOptions ao;
        ao.seed_point = config.options.seed_point;
        return quantify_adaptive(sys, policy, h, config.seed, ao);
      }
      SpeOptions so;
      so.prioritized = config.options.prioritized;
      so.priority_power = config.options.priority_power;
      so.replay = config.options.replay;
      so.workers = workers;
      so.keep_trajectories = config.options.trajectories;
      return quantify_spe(sys, policy, h, config.seed, so);
    }();
    write_quant(report, res.report);
    write_cells(dir, res.cover, digest);
    write_slices(dir, res.cover, digest);
    trajectories = std::move(res.trajectories);
    const bool ok = alg == "qnt-vs" ? res.report.success : res.report.converged;
    code = ok ? kExitTrue : kExitFalse;
    for (const auto& w : res.report.warnings) log << "warning: " << w << '\n';
    log << alg << ": " << res.report.cell_count << " cells, volume "
        << res.report.volume << ", " << res.report.n_fresh_samples
        << " fresh samples" << (ok ? "" : " (not converged)") << '\n';
  }

  if (config.options.trajectories) {
    std::ostringstream os;
    for (const auto& t : trajectories) write_trajectory_ndjson(os, t);
    write_file(dir / "trajectories.ndjson", os.str());
  }
  if (options.timing) {
    report["wall_time"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
  write_file(dir / "report.json", report.dump(2) + "\n");
  return code;
}

// --- compare ---------------------------------------------------------------

namespace {

struct LoadedRun {
  std::string dir;
  ojson report;
  BoxRegion box;
  double delta = 0.0;
  bool is_oracle = false;
  std::optional<OracleSet> oracle;
  std::optional<DeltaCover> cover;
};

LoadedRun load_run(const std::string& dir) {
  LoadedRun run;
  run.dir = dir;
  try {
    run.report = ojson::parse(read_file(fs::path(dir) / "report.json"));
    const auto& sb = run.report.at("system").at("state_box");
    run.box = BoxRegion(sb.at(0).get<std::vector<double>>(),
                        sb.at(1).get<std::vector<double>>());
    run.delta = run.report.at("final_delta").get<double>();
  } catch (const CompareError&) {
    throw;
  } catch (const std::exception& e) {
    throw CompareError(dir + "/report.json: " + e.what());
  }
  run.is_oracle = run.report.value("algorithm", "") == "oracle";
  if (run.is_oracle) {
    std::istringstream is(read_file(fs::path(dir) / "oracle.csv"));
    run.oracle = read_oracle_csv(is, run.box);
  } else {
    std::istringstream is(read_file(fs::path(dir) / "cells.csv"));
    run.cover = read_cover_csv(is, run.box);
  }
  return run;
}

std::vector<char> mask_on(const LoadedRun& run, const DeltaCover& grid) {
  if (run.oracle) {
    const auto& o = *run.oracle;
    if (o.grid.size() == grid.size() && o.grid.radius() == grid.radius() &&
        o.grid.centers() == grid.centers())
      return o.mask;
    DeltaCover kept(o.grid.domain(), o.grid.radius());
    for (std::size_t i = 0; i < o.grid.size(); ++i)
      if (o.mask[i]) kept.add(o.grid.center(i));
    return rasterize(kept, grid);
  }
  return rasterize(*run.cover, grid);
}

ojson summary(const LoadedRun& r, double raster_volume) {
  return ojson{{"dir", r.dir},
               {"algorithm", r.report.value("algorithm", "")},
               {"sv_policy", r.report.at("system").value("sv_policy", "")},
               {"config_digest", r.report.value("config_digest", "")},
               {"volume", r.report.value("volume", 0.0)},
               {"raster_volume", raster_volume}};
}

}  // namespace

std::string compare_runs(const std::string& dir_a, const std::string& dir_b,
                         bool force) {
  const auto a = load_run(dir_a);
  const auto b = load_run(dir_b);
  const auto da = a.report.value("comparison_digest", "");
  const auto db = b.report.value("comparison_digest", "");
  if (da != db && !force)
    throw CompareError("comparison digests differ (" + da + " vs " + db +
                       "); rerun with --force to compare anyway");
  if (!(a.box == b.box)) throw CompareError("state boxes differ");
  if (std::abs(a.delta - b.delta) > 1e-9 * std::max(1.0, a.delta) && !force)
    throw CompareError("resolutions differ; rerun with --force to compare on "
                       "the finer lattice");

  const auto grid = build_cover(a.box, std::min(a.delta, b.delta));
  const auto ma = mask_on(a, grid);
  const auto mb = mask_on(b, grid);
  const auto cmp = compare_sets(grid, ma, mb);

  ojson out;
  out["a"] = summary(a, cmp.volume_a);
  out["b"] = summary(b, cmp.volume_b);
  out["digest_match"] = da == db;
  out["lattice_delta"] = grid.radius();
  out["volume_order"] = cmp.volume_a > cmp.volume_b   ? "a>b"
                        : cmp.volume_a < cmp.volume_b ? "a<b"
                                                      : "a=b";
  out["volume_delta"] = cmp.volume_a - cmp.volume_b;
  out["sym_diff_volume"] = cmp.sym_diff_volume;
  out["a_minus_b"] = cmp.a_minus_b;
  out["b_minus_a"] = cmp.b_minus_a;
  out["jaccard"] = cmp.jaccard;
  // Percentages are relative to the oracle when one side is an oracle.
  const double ref = b.is_oracle || !a.is_oracle ? cmp.volume_b : cmp.volume_a;
  out["sym_diff_pct"] = ref > 0.0 ? 100.0 * cmp.sym_diff_volume / ref : 0.0;
  ojson policies = ojson::array();
  for (const auto* r : {&a, &b})
    policies.push_back({{"sv_policy", r->report.at("system").value("sv_policy", "")},
                        {"algorithm", r->report.value("algorithm", "")},
                        {"raster_volume", r == &a ? cmp.volume_a : cmp.volume_b}});
  out["policies"] = policies;
  return out.dump(2) + "\n";
}

}  // namespace setquant
