#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace setquant {

using StatePoint = std::vector<double>;
using ActionPoint = std::vector<double>;
using DisturbancePoint = std::vector<double>;

/// Raised when a distance query is made against a cover with no active cells.
class EmptyCoverError : public std::runtime_error {
 public:
  EmptyCoverError() : std::runtime_error("cover has no active cells") {}
};

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/*
 * Axis-aligned box [lower, upper] in R^n. A zero-dimensional box is allowed
 * and stands for the trivial action space of systems without inputs.
 */
class BoxRegion {
 public:
  BoxRegion() = default;
  BoxRegion(std::vector<double> lower, std::vector<double> upper);

  std::size_t dim() const { return lower_.size(); }
  const std::vector<double>& lower() const { return lower_; }
  const std::vector<double>& upper() const { return upper_; }
  double lower(std::size_t i) const { return lower_[i]; }
  double upper(std::size_t i) const { return upper_[i]; }
  double width(std::size_t i) const { return upper_[i] - lower_[i]; }

  double volume() const;
  bool contains(std::span<const double> p, double tol = 0.0) const;
  StatePoint center() const;
  StatePoint clamp(std::span<const double> p) const;

  bool operator==(const BoxRegion&) const = default;

 private:
  std::vector<double> lower_;
  std::vector<double> upper_;
};

double linf_distance(std::span<const double> a, std::span<const double> b);

/// l-infinity signed point-to-set distance: negative inside, zero on the
/// boundary, positive outside. Equals max_i max(lo_i - p_i, p_i - hi_i).
double signed_distance(std::span<const double> p, const BoxRegion& box);

/// True iff 0 >= signed_distance(p, box) >= -band.
bool in_boundary_band(std::span<const double> p, const BoxRegion& box,
                      double band);

/// Predicate form of the band, bound to one box.
class BoundaryBand {
 public:
  BoundaryBand(BoxRegion box, double band);
  bool operator()(std::span<const double> p) const {
    return in_boundary_band(p, box_, band_);
  }

 private:
  BoxRegion box_;
  double band_;
};

/*
 * Hash grid over R^n with a fixed bucket width. Used to answer
 * "is there a point within r of p" in O(3^n) bucket probes for r <= width.
 */
class LatticeIndex {
 public:
  LatticeIndex() = default;
  LatticeIndex(std::vector<double> origin, double width);

  void insert(std::span<const double> p, std::uint32_t id);
  void clear() { buckets_.clear(); }
  double width() const { return width_; }

  /// Visits the ids stored in the 3^n buckets around p.
  template <typename Fn>
  void for_each_near(std::span<const double> p, Fn&& fn) const;

 private:
  struct KeyHash {
    std::size_t operator()(const std::vector<std::int64_t>& k) const;
  };
  std::vector<std::int64_t> key_of(std::span<const double> p) const;

  std::vector<double> origin_;
  double width_ = 1.0;
  std::unordered_map<std::vector<std::int64_t>, std::vector<std::uint32_t>,
                     KeyHash>
      buckets_;
};

template <typename Fn>
void LatticeIndex::for_each_near(std::span<const double> p, Fn&& fn) const {
  if (buckets_.empty()) return;
  const auto base = key_of(p);
  const std::size_t n = base.size();
  std::vector<std::int64_t> key(base);
  std::vector<int> offset(n, -1);
  for (;;) {
    for (std::size_t i = 0; i < n; ++i) key[i] = base[i] + offset[i];
    if (auto it = buckets_.find(key); it != buckets_.end()) {
      for (auto id : it->second) fn(id);
    }
    std::size_t d = 0;
    while (d < n && offset[d] == 1) offset[d++] = -1;
    if (d == n) break;
    ++offset[d];
  }
}

/// Result of a nearest-center query.
struct NearestCell {
  std::size_t ordinal;
  double distance;
};

/*
 * A delta-covering set: a list of centers sharing one l-infinity radius.
 * Centers are never erased; pruning flips them inactive so ordinals stay
 * stable for the reach graph. Distance queries only see active centers.
 */
class DeltaCover {
 public:
  DeltaCover(BoxRegion domain, double radius);

  const BoxRegion& domain() const { return domain_; }
  double radius() const { return radius_; }
  std::size_t dim() const { return domain_.dim(); }
  std::size_t size() const { return centers_.size(); }
  std::size_t active_count() const { return active_count_; }
  bool empty() const { return active_count_ == 0; }

  const StatePoint& center(std::size_t ordinal) const {
    return centers_[ordinal];
  }
  const std::vector<StatePoint>& centers() const { return centers_; }
  bool is_active(std::size_t ordinal) const { return active_[ordinal] != 0; }
  std::vector<std::size_t> active_ordinals() const;
  std::vector<StatePoint> active_centers() const;

  /// Adds a center. An exact duplicate of an existing center is not added
  /// again; its ordinal is returned instead (and its activity is unchanged).
  std::size_t add(StatePoint center);
  void deactivate(std::size_t ordinal);

  /// Shrinks or grows the shared radius; rebuilds the lookup index.
  void set_radius(double radius);

  /// Nearest active center, ties broken by lowest ordinal. nullopt if empty.
  std::optional<NearestCell> nearest(std::span<const double> p) const;
  /// Minimum l-infinity distance to an active center. Throws on empty cover.
  double distance(std::span<const double> p) const;
  bool contains(std::span<const double> p) const;

  /// Ordinal of an active center within `tol` of p, if any (lattice lookup).
  std::optional<std::size_t> find(std::span<const double> p,
                                  double tol = 1e-9) const;

 private:
  void check_dim(std::span<const double> p) const;
  void rebuild_index();

  BoxRegion domain_;
  double radius_;
  std::vector<StatePoint> centers_;
  std::vector<char> active_;
  std::size_t active_count_ = 0;
  LatticeIndex index_;
};

/// Axis-aligned lattice with pitch 2*delta, first center at lower+delta and
/// the last row clamped to upper-delta (or the midpoint for narrow boxes).
DeltaCover build_cover(const BoxRegion& box, double delta);

/// Lattice coordinates of one axis of build_cover(box, delta).
std::vector<double> lattice_axis(double lower, double upper, double delta);

/// Scalar form of the cover distance; throws EmptyCoverError on empty covers.
double cover_distance(const DeltaCover& cover, std::span<const double> p);

/*
 * Point cloud with nearest-distance queries, used for the pruned set.
 */
class PointCloud {
 public:
  PointCloud(std::vector<double> origin, double bucket_width);

  void insert(StatePoint p);
  const std::vector<StatePoint>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }

  /// Exact minimum l-infinity distance; +infinity when empty.
  double min_distance(std::span<const double> p) const;
  /// True iff some point lies within r (inclusive) of p.
  bool any_within(std::span<const double> p, double r) const;
  void set_bucket_width(double width);

 private:
  std::vector<double> origin_;
  std::vector<StatePoint> points_;
  LatticeIndex index_;
};

/// New cover of radius gamma*delta: the old centers (with their activity)
/// plus the gamma*delta lattice centers lying in the old active footprint
/// whose distance to every excluded point exceeds `margin`.
DeltaCover refine_cover(const DeltaCover& cover, double gamma,
                        const std::vector<StatePoint>& excluded,
                        double margin);

/// Sum over active cells of the cell measure clipped to the domain box.
double volume_estimate(const DeltaCover& cover);

/// Cells of `grid` holding an active center of `cover` strictly inside.
std::vector<char> rasterize(const DeltaCover& cover, const DeltaCover& grid);

// CSV: header "dim,delta", one value row, then one row per active center.
void write_cover_csv(std::ostream& os, const DeltaCover& cover,
                     const std::string& digest = {});
DeltaCover read_cover_csv(std::istream& is, const BoxRegion& domain);

/// Fixed-point decimal with 9 significant digits.
std::string format_sig9(double x);

}  // namespace setquant
