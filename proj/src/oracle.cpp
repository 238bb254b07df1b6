#include "setquant/oracle.hpp"

#include <istream>
#include <ostream>
#include <sstream>

#include "setquant/parallel.hpp"

namespace setquant {

namespace {
constexpr std::int64_t kExit = -1;
}

std::vector<ActionPoint> default_action_samples(const BoxRegion& box) {
  if (box.dim() == 0) return {ActionPoint{}};
  return discretize_box(box, 3);
}

std::vector<DisturbancePoint> default_disturbance_samples(
    const ScenarioSystem& sys) {
  if (sys.omega_bar == 0.0 || sys.disturbance_dim == 0)
    return {DisturbancePoint(sys.disturbance_dim, 0.0)};
  return discretize_box(
      BoxRegion(std::vector<double>(sys.disturbance_dim, -sys.omega_bar),
                std::vector<double>(sys.disturbance_dim, sys.omega_bar)),
      2);
}

OracleSet brute_force_invariant(const ScenarioSystem& sys,
                                const DeltaCover& grid,
                                const std::vector<ActionPoint>& actions,
                                const std::vector<DisturbancePoint>& disturbances,
                                const OracleOptions& options) {
  if (grid.dim() != sys.dim()) throw DimensionError("oracle grid dimension");
  if (actions.empty() || disturbances.empty())
    throw std::invalid_argument("oracle needs at least one action and disturbance");
  if (options.steps_per_transition < 1)
    throw std::invalid_argument("steps_per_transition must be >= 1");

  const std::size_t cells = grid.size();
  const std::size_t fan = actions.size() * disturbances.size();
  std::vector<std::int64_t> succ(cells * fan, kExit);

  parallel_for(cells, options.workers, [&](std::size_t c) {
    if (!grid.is_active(c)) return;
    std::size_t slot = c * fan;
    for (const auto& u : actions) {
      for (const auto& w : disturbances) {
        StatePoint s = grid.center(c);
        bool unsafe = false;
        for (std::size_t h = 0; h < options.steps_per_transition; ++h) {
          auto out = step(sys, s, u, w);
          if (out.classification == StepClass::Unsafe) {
            unsafe = true;
            break;
          }
          s = std::move(out.next);
        }
        std::int64_t target = kExit;
        if (!unsafe) {
          const auto near = grid.nearest(s);
          if (near && near->distance <= grid.radius())
            target = static_cast<std::int64_t>(near->ordinal);
        }
        succ[slot++] = target;
      }
    }
  });

  OracleSet out{grid, std::vector<char>(cells, 0), 0};
  for (std::size_t c = 0; c < cells; ++c) out.mask[c] = grid.is_active(c);
  std::vector<std::size_t> removals;
  for (;;) {
    if (out.iterations >= options.max_iter)
      throw OracleDivergence("oracle did not reach a fixed point");
    ++out.iterations;
    removals.clear();
    for (std::size_t c = 0; c < cells; ++c) {
      if (!out.mask[c]) continue;
      for (std::size_t k = 0; k < fan; ++k) {
        const auto t = succ[c * fan + k];
        if (t == kExit || !out.mask[static_cast<std::size_t>(t)]) {
          removals.push_back(c);
          break;
        }
      }
    }
    if (removals.empty()) break;
    for (auto c : removals) out.mask[c] = 0;
  }
  return out;
}

SetComparison compare_sets(const DeltaCover& grid, const std::vector<char>& a,
                           const std::vector<char>& b) {
  if (a.size() != grid.size() || b.size() != grid.size())
    throw std::invalid_argument("compare_sets: masks do not match the grid");
  const auto& box = grid.domain();
  const double r = grid.radius();
  SetComparison s;
  double inter = 0.0, uni = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!a[i] && !b[i]) continue;
    const auto& c = grid.center(i);
    double v = 1.0;
    for (std::size_t d = 0; d < box.dim(); ++d)
      v *= std::max(0.0, std::min(c[d] + r, box.upper(d)) -
                             std::max(c[d] - r, box.lower(d)));
    uni += v;
    if (a[i]) s.volume_a += v;
    if (b[i]) s.volume_b += v;
    if (a[i] && b[i]) inter += v;
    else if (a[i]) s.a_minus_b += v;
    else s.b_minus_a += v;
  }
  s.sym_diff_volume = s.a_minus_b + s.b_minus_a;
  s.jaccard = uni > 0.0 ? inter / uni : 1.0;
  return s;
}

void write_oracle_csv(std::ostream& os, const OracleSet& oracle,
                      const std::string& digest) {
  const auto& grid = oracle.grid;
  if (!digest.empty()) os << "# config_digest=" << digest << '\n';
  os << "dim,delta\n" << grid.dim() << ',' << format_sig9(grid.radius()) << '\n';
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (double x : grid.center(i)) os << format_sig9(x) << ',';
    os << (oracle.mask[i] ? 1 : 0) << '\n';
  }
}

OracleSet read_oracle_csv(std::istream& is, const BoxRegion& domain) {
  // Split off the member column, then reuse the cover reader.
  std::stringstream centers;
  std::vector<char> mask;
  std::string line;
  int data_rows = 0;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (data_rows++ < 2) {
      centers << line << '\n';
      continue;
    }
    const auto comma = line.rfind(',');
    if (comma == std::string::npos)
      throw std::runtime_error("oracle csv: missing member column");
    mask.push_back(line.substr(comma + 1) == "1");
    centers << line.substr(0, comma) << '\n';
  }
  auto grid = read_cover_csv(centers, domain);
  if (grid.size() != mask.size())
    throw std::runtime_error("oracle csv: duplicate cell rows");
  return OracleSet{std::move(grid), std::move(mask), 0};
}

}  // namespace setquant
