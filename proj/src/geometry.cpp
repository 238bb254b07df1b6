#include "setquant/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace setquant {

BoxRegion::BoxRegion(std::vector<double> lower, std::vector<double> upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() != upper_.size())
    throw DimensionError("box bounds differ in dimension");
  for (std::size_t i = 0; i < lower_.size(); ++i) {
    if (!(lower_[i] < upper_[i]))
      throw std::invalid_argument("box requires lower < upper on axis " +
                                  std::to_string(i));
  }
}

double BoxRegion::volume() const {
  double v = 1.0;
  for (std::size_t i = 0; i < dim(); ++i) v *= width(i);
  return v;
}

bool BoxRegion::contains(std::span<const double> p, double tol) const {
  if (p.size() != dim()) throw DimensionError("point/box dimension mismatch");
  for (std::size_t i = 0; i < dim(); ++i) {
    if (p[i] < lower_[i] - tol || p[i] > upper_[i] + tol) return false;
  }
  return true;
}

StatePoint BoxRegion::center() const {
  StatePoint c(dim());
  for (std::size_t i = 0; i < dim(); ++i) c[i] = 0.5 * (lower_[i] + upper_[i]);
  return c;
}

StatePoint BoxRegion::clamp(std::span<const double> p) const {
  StatePoint c(p.begin(), p.end());
  for (std::size_t i = 0; i < dim(); ++i)
    c[i] = std::clamp(c[i], lower_[i], upper_[i]);
  return c;
}

double linf_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("point dimension mismatch");
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

double signed_distance(std::span<const double> p, const BoxRegion& box) {
  if (p.size() != box.dim())
    throw DimensionError("point/box dimension mismatch");
  double d = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < p.size(); ++i) {
    d = std::max(d, box.lower(i) - p[i]);
    d = std::max(d, p[i] - box.upper(i));
  }
  return d;
}

bool in_boundary_band(std::span<const double> p, const BoxRegion& box,
                      double band) {
  const double d = signed_distance(p, box);
  return d <= 0.0 && d >= -band;
}

BoundaryBand::BoundaryBand(BoxRegion box, double band)
    : box_(std::move(box)), band_(band) {
  if (!(band > 0.0))
    throw std::invalid_argument("boundary band width must be positive");
}

// --- LatticeIndex ----------------------------------------------------------

LatticeIndex::LatticeIndex(std::vector<double> origin, double width)
    : origin_(std::move(origin)), width_(width) {
  if (!(width > 0.0)) throw std::invalid_argument("bucket width must be > 0");
}

std::size_t LatticeIndex::KeyHash::operator()(
    const std::vector<std::int64_t>& k) const {
  std::uint64_t h = 1469598103934665603ull;
  for (auto v : k) {
    h ^= static_cast<std::uint64_t>(v) + 0x9e3779b97f4a7c15ull + (h << 6) +
         (h >> 2);
  }
  return static_cast<std::size_t>(h);
}

std::vector<std::int64_t> LatticeIndex::key_of(
    std::span<const double> p) const {
  std::vector<std::int64_t> key(p.size());
  for (std::size_t i = 0; i < p.size(); ++i)
    key[i] = static_cast<std::int64_t>(std::floor((p[i] - origin_[i]) / width_));
  return key;
}

void LatticeIndex::insert(std::span<const double> p, std::uint32_t id) {
  buckets_[key_of(p)].push_back(id);
}

// --- DeltaCover ------------------------------------------------------------

DeltaCover::DeltaCover(BoxRegion domain, double radius)
    : domain_(std::move(domain)), radius_(radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("cover radius must be > 0");
  index_ = LatticeIndex(domain_.lower(), 2.0 * radius_);
}

void DeltaCover::check_dim(std::span<const double> p) const {
  if (p.size() != dim()) throw DimensionError("point/cover dimension mismatch");
}

std::vector<std::size_t> DeltaCover::active_ordinals() const {
  std::vector<std::size_t> out;
  out.reserve(active_count_);
  for (std::size_t i = 0; i < centers_.size(); ++i)
    if (active_[i]) out.push_back(i);
  return out;
}

std::vector<StatePoint> DeltaCover::active_centers() const {
  std::vector<StatePoint> out;
  out.reserve(active_count_);
  for (std::size_t i = 0; i < centers_.size(); ++i)
    if (active_[i]) out.push_back(centers_[i]);
  return out;
}

std::size_t DeltaCover::add(StatePoint center) {
  check_dim(center);
  std::optional<std::size_t> dup;
  index_.for_each_near(center, [&](std::uint32_t id) {
    if (!dup && centers_[id] == center) dup = id;
  });
  if (dup) return *dup;
  const auto ordinal = centers_.size();
  index_.insert(center, static_cast<std::uint32_t>(ordinal));
  centers_.push_back(std::move(center));
  active_.push_back(1);
  ++active_count_;
  return ordinal;
}

void DeltaCover::deactivate(std::size_t ordinal) {
  if (ordinal >= centers_.size()) throw std::out_of_range("unknown ordinal");
  if (active_[ordinal]) {
    active_[ordinal] = 0;
    --active_count_;
  }
}

void DeltaCover::set_radius(double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("cover radius must be > 0");
  radius_ = radius;
  rebuild_index();
}

void DeltaCover::rebuild_index() {
  index_ = LatticeIndex(domain_.lower(), 2.0 * radius_);
  for (std::size_t i = 0; i < centers_.size(); ++i)
    index_.insert(centers_[i], static_cast<std::uint32_t>(i));
}

std::optional<NearestCell> DeltaCover::nearest(
    std::span<const double> p) const {
  check_dim(p);
  if (active_count_ == 0) return std::nullopt;
  NearestCell best{centers_.size(), std::numeric_limits<double>::infinity()};
  auto consider = [&](std::size_t id) {
    if (!active_[id]) return;
    const double d = linf_distance(p, centers_[id]);
    if (d < best.distance || (d == best.distance && id < best.ordinal))
      best = {id, d};
  };
  index_.for_each_near(p, [&](std::uint32_t id) { consider(id); });
  // Anything outside the probed buckets is farther than one bucket width.
  if (best.distance <= index_.width()) return best;
  for (std::size_t i = 0; i < centers_.size(); ++i) consider(i);
  return best;
}

double DeltaCover::distance(std::span<const double> p) const {
  auto n = nearest(p);
  if (!n) throw EmptyCoverError();
  return n->distance;
}

bool DeltaCover::contains(std::span<const double> p) const {
  check_dim(p);
  bool hit = false;
  index_.for_each_near(p, [&](std::uint32_t id) {
    if (!hit && active_[id] && linf_distance(p, centers_[id]) <= radius_)
      hit = true;
  });
  return hit;
}

std::optional<std::size_t> DeltaCover::find(std::span<const double> p,
                                            double tol) const {
  check_dim(p);
  std::optional<std::size_t> out;
  index_.for_each_near(p, [&](std::uint32_t id) {
    if (active_[id] && linf_distance(p, centers_[id]) <= tol &&
        (!out || id < *out))
      out = id;
  });
  return out;
}

std::vector<double> lattice_axis(double lower, double upper, double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("delta must be > 0");
  const double width = upper - lower;
  if (width <= 2.0 * delta) return {0.5 * (lower + upper)};
  const auto count = static_cast<std::size_t>(std::ceil(width / (2.0 * delta) - 1e-12));
  std::vector<double> axis;
  axis.reserve(count);
  for (std::size_t k = 0; k < count; ++k)
    axis.push_back(std::min(lower + delta + 2.0 * delta * static_cast<double>(k),
                            upper - delta));
  return axis;
}

namespace {

template <typename Fn>
void for_each_product(const std::vector<std::vector<double>>& axes, Fn&& fn) {
  const std::size_t n = axes.size();
  for (const auto& a : axes)
    if (a.empty()) return;
  std::vector<std::size_t> idx(n, 0);
  StatePoint p(n);
  for (;;) {
    for (std::size_t i = 0; i < n; ++i) p[i] = axes[i][idx[i]];
    fn(p);
    std::size_t d = n;
    while (d > 0) {
      --d;
      if (++idx[d] < axes[d].size()) break;
      idx[d] = 0;
      if (d == 0) return;
    }
    if (n == 0) return;
  }
}

}  // namespace

DeltaCover build_cover(const BoxRegion& box, double delta) {
  DeltaCover cover(box, delta);
  std::vector<std::vector<double>> axes;
  for (std::size_t i = 0; i < box.dim(); ++i)
    axes.push_back(lattice_axis(box.lower(i), box.upper(i), delta));
  for_each_product(axes, [&](const StatePoint& p) { cover.add(p); });
  return cover;
}

double cover_distance(const DeltaCover& cover, std::span<const double> p) {
  return cover.distance(p);
}

// --- PointCloud ------------------------------------------------------------

PointCloud::PointCloud(std::vector<double> origin, double bucket_width)
    : origin_(std::move(origin)), index_(origin_, bucket_width) {}

void PointCloud::insert(StatePoint p) {
  index_.insert(p, static_cast<std::uint32_t>(points_.size()));
  points_.push_back(std::move(p));
}

double PointCloud::min_distance(std::span<const double> p) const {
  double best = std::numeric_limits<double>::infinity();
  index_.for_each_near(p, [&](std::uint32_t id) {
    best = std::min(best, linf_distance(p, points_[id]));
  });
  if (best <= index_.width()) return best;
  for (const auto& q : points_) best = std::min(best, linf_distance(p, q));
  return best;
}

bool PointCloud::any_within(std::span<const double> p, double r) const {
  if (r <= index_.width()) {
    bool hit = false;
    index_.for_each_near(p, [&](std::uint32_t id) {
      if (!hit && linf_distance(p, points_[id]) <= r) hit = true;
    });
    return hit;
  }
  return min_distance(p) <= r;
}

void PointCloud::set_bucket_width(double width) {
  index_ = LatticeIndex(origin_, width);
  for (std::size_t i = 0; i < points_.size(); ++i)
    index_.insert(points_[i], static_cast<std::uint32_t>(i));
}

// --- refinement, volume, rasterization --------------------------------------

DeltaCover refine_cover(const DeltaCover& cover, double gamma,
                        const std::vector<StatePoint>& excluded,
                        double margin) {
  if (!(gamma > 0.0 && gamma < 1.0))
    throw std::invalid_argument("gamma must lie in (0, 1)");
  const double delta = cover.radius();
  const double fine = gamma * delta;
  const BoxRegion& box = cover.domain();

  DeltaCover out(box, fine);
  for (std::size_t i = 0; i < cover.size(); ++i) {
    const auto ord = out.add(cover.center(i));
    if (!cover.is_active(i)) out.deactivate(ord);
  }

  PointCloud blocked(box.lower(), std::max(margin, fine));
  for (const auto& e : excluded) blocked.insert(e);

  std::vector<std::vector<double>> lattice;
  for (std::size_t d = 0; d < box.dim(); ++d)
    lattice.push_back(lattice_axis(box.lower(d), box.upper(d), fine));

  const double tol = 1e-9 * std::max(1.0, delta);
  for (std::size_t i = 0; i < cover.size(); ++i) {
    if (!cover.is_active(i)) continue;
    const auto& c = cover.center(i);
    std::vector<std::vector<double>> axes(box.dim());
    for (std::size_t d = 0; d < box.dim(); ++d) {
      for (double v : lattice[d])
        if (std::abs(v - c[d]) <= delta + tol) axes[d].push_back(v);
    }
    for_each_product(axes, [&](const StatePoint& p) {
      if (blocked.any_within(p, margin)) return;
      out.add(p);
    });
  }
  return out;
}

double volume_estimate(const DeltaCover& cover) {
  const auto& box = cover.domain();
  const double r = cover.radius();
  double total = 0.0;
  for (std::size_t i = 0; i < cover.size(); ++i) {
    if (!cover.is_active(i)) continue;
    const auto& c = cover.center(i);
    double v = 1.0;
    for (std::size_t d = 0; d < box.dim(); ++d) {
      const double lo = std::max(c[d] - r, box.lower(d));
      const double hi = std::min(c[d] + r, box.upper(d));
      v *= std::max(0.0, hi - lo);
    }
    total += v;
  }
  return total;
}

std::vector<char> rasterize(const DeltaCover& cover, const DeltaCover& grid) {
  if (cover.dim() != grid.dim())
    throw DimensionError("cover/grid dimension mismatch");
  std::vector<char> mask(grid.size(), 0);
  for (std::size_t j = 0; j < grid.size(); ++j) {
    auto n = cover.nearest(grid.center(j));
    mask[j] = n && n->distance < grid.radius();
  }
  return mask;
}

// --- CSV ---------------------------------------------------------------------

std::string format_sig9(double x) {
  if (x == 0.0 || !std::isfinite(x)) {
    if (!std::isfinite(x)) return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
    return "0.00000000";
  }
  const int int_digits =
      static_cast<int>(std::floor(std::log10(std::abs(x)))) + 1;
  const int decimals = std::max(0, 9 - int_digits);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, x);
  return buf;
}

void write_cover_csv(std::ostream& os, const DeltaCover& cover,
                     const std::string& digest) {
  if (!digest.empty()) os << "# config_digest=" << digest << '\n';
  os << "dim,delta\n" << cover.dim() << ',' << format_sig9(cover.radius())
     << '\n';
  for (std::size_t i = 0; i < cover.size(); ++i) {
    if (!cover.is_active(i)) continue;
    const auto& c = cover.center(i);
    for (std::size_t d = 0; d < c.size(); ++d)
      os << (d ? "," : "") << format_sig9(c[d]);
    os << '\n';
  }
}

namespace {

std::vector<double> parse_row(const std::string& line) {
  std::vector<double> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(std::stod(cell));
  return out;
}

bool next_data_line(std::istream& is, std::string& line) {
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    return true;
  }
  return false;
}

}  // namespace

DeltaCover read_cover_csv(std::istream& is, const BoxRegion& domain) {
  std::string line;
  if (!next_data_line(is, line) || line != "dim,delta")
    throw std::runtime_error("cover csv: missing 'dim,delta' header");
  if (!next_data_line(is, line))
    throw std::runtime_error("cover csv: missing dim/delta row");
  const auto head = parse_row(line);
  if (head.size() != 2) throw std::runtime_error("cover csv: bad dim/delta row");
  const auto dim = static_cast<std::size_t>(head[0]);
  if (dim != domain.dim())
    throw DimensionError("cover csv: dimension does not match domain");
  DeltaCover cover(domain, head[1]);
  while (next_data_line(is, line)) {
    auto row = parse_row(line);
    if (row.size() < dim) throw std::runtime_error("cover csv: short row");
    row.resize(dim);
    cover.add(std::move(row));
  }
  return cover;
}

}  // namespace setquant
