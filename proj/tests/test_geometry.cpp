#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "setquant/geometry.hpp"
#include "setquant/rng.hpp"

using namespace setquant;

namespace {

BoxRegion unit(std::size_t n) {
  return BoxRegion(std::vector<double>(n, 0.0), std::vector<double>(n, 1.0));
}

std::vector<double> sorted_axis(const DeltaCover& c, std::size_t axis) {
  std::vector<double> v;
  for (const auto& p : c.active_centers()) v.push_back(p[axis]);
  std::sort(v.begin(), v.end());
  return v;
}

TEST(BoxRegion, RejectsDegenerateBounds) {
  EXPECT_THROW(BoxRegion({0.0}, {0.0}), std::invalid_argument);
  EXPECT_THROW(BoxRegion({1.0}, {0.0}), std::invalid_argument);
  EXPECT_THROW(BoxRegion({0.0, 0.0}, {1.0}), DimensionError);
  EXPECT_DOUBLE_EQ(BoxRegion({}, {}).volume(), 1.0);
}

TEST(SignedDistance, Examples) {
  const BoxRegion box({-1, -1}, {1, 1});
  EXPECT_DOUBLE_EQ(signed_distance(std::vector<double>{0, 0}, box), -1.0);
  EXPECT_DOUBLE_EQ(signed_distance(std::vector<double>{2, 0}, box), 1.0);
  EXPECT_DOUBLE_EQ(signed_distance(std::vector<double>{1, 0.3}, box), 0.0);
  EXPECT_THROW(signed_distance(std::vector<double>{0}, box), DimensionError);
}

TEST(SignedDistance, LipschitzAndSignProperty) {
  const BoxRegion box({-1, 0, 2}, {1, 3, 2.5});
  const BoxRegion probe({-3, -2, 0}, {3, 5, 4.5});
  Rng rng(11);
  for (int k = 0; k < 5000; ++k) {
    const auto p = rng.point_in(probe);
    const auto q = rng.point_in(probe);
    const double dp = signed_distance(p, box);
    const double dq = signed_distance(q, box);
    EXPECT_LE(std::abs(dp - dq), linf_distance(p, q) + 1e-12);
    EXPECT_EQ(dp <= 0.0, box.contains(p));
  }
}

TEST(BuildCover, Examples) {
  auto one = build_cover(unit(1), 0.5);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_DOUBLE_EQ(one.center(0)[0], 0.5);

  EXPECT_EQ(build_cover(unit(2), 0.25).size(), 4u);

  auto clamped = build_cover(unit(1), 0.3);
  EXPECT_EQ(sorted_axis(clamped, 0), (std::vector<double>{0.3, 0.7}));
}

TEST(BuildCover, CoversAndStaysInsideProperty) {
  Rng rng(3);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 1 + rng.index(3);
    std::vector<double> lo(n), hi(n);
    for (std::size_t i = 0; i < n; ++i) {
      lo[i] = rng.uniform(-5, 5);
      hi[i] = lo[i] + rng.uniform(0.1, 6);
    }
    const BoxRegion box(lo, hi);
    const double delta = rng.uniform(0.05, 2.0);
    const auto cover = build_cover(box, delta);
    for (const auto& c : cover.centers()) EXPECT_TRUE(box.contains(c));
    for (int k = 0; k < 200; ++k) {
      const auto p = rng.point_in(box);
      EXPECT_LE(cover.distance(p), delta + 1e-12);
    }
  }
}

TEST(CoverDistance, Examples) {
  const auto c = build_cover(unit(1), 0.5);
  EXPECT_DOUBLE_EQ(cover_distance(c, std::vector<double>{0.5}), 0.0);
  EXPECT_TRUE(c.contains(std::vector<double>{0.5}));
  EXPECT_NEAR(cover_distance(c, std::vector<double>{1.2}), 0.7, 1e-12);
  EXPECT_FALSE(c.contains(std::vector<double>{1.2}));

  const auto two = build_cover(unit(1), 0.25);
  ASSERT_EQ(two.size(), 2u);
  EXPECT_DOUBLE_EQ(cover_distance(two, std::vector<double>{0.5}), 0.25);
  EXPECT_TRUE(two.contains(std::vector<double>{0.5}));
}

TEST(CoverDistance, EmptyCoverIsAnError) {
  DeltaCover c(unit(1), 0.5);
  EXPECT_THROW(cover_distance(c, std::vector<double>{0.5}), EmptyCoverError);
  EXPECT_FALSE(c.nearest(std::vector<double>{0.5}).has_value());
  c.add({0.5});
  c.deactivate(0);
  EXPECT_THROW(c.distance(std::vector<double>{0.5}), EmptyCoverError);
}

TEST(DeltaCover, TiesGoToLowestOrdinalAndFarQueriesAreExact) {
  DeltaCover c(BoxRegion({0.0}, {10.0}), 0.25);
  c.add({4.0});
  c.add({6.0});
  const auto n = c.nearest(std::vector<double>{5.0});
  ASSERT_TRUE(n);
  EXPECT_EQ(n->ordinal, 0u);
  EXPECT_DOUBLE_EQ(n->distance, 1.0);
  // Far outside the probed buckets.
  EXPECT_DOUBLE_EQ(c.distance(std::vector<double>{9.5}), 3.5);
  EXPECT_EQ(c.add({4.0}), 0u);
  EXPECT_EQ(c.size(), 2u);
}

TEST(DeltaCover, NearestMatchesLinearScanProperty) {
  Rng rng(5);
  const BoxRegion box({0, 0, 0}, {4, 4, 4});
  DeltaCover c(box, 0.3);
  for (int k = 0; k < 150; ++k) c.add(rng.point_in(box));
  for (int k = 0; k < 30; ++k) c.deactivate(rng.index(c.size()));
  for (int k = 0; k < 500; ++k) {
    const auto p = rng.point_in(BoxRegion({-1, -1, -1}, {5, 5, 5}));
    double best = INFINITY;
    for (std::size_t i = 0; i < c.size(); ++i)
      if (c.is_active(i)) best = std::min(best, linf_distance(p, c.center(i)));
    EXPECT_DOUBLE_EQ(c.distance(p), best);
    EXPECT_EQ(c.contains(p), best <= 0.3);
  }
}

TEST(RefineCover, Examples) {
  const auto c = build_cover(unit(1), 0.5);
  const auto r = refine_cover(c, 0.5, {}, 0.25);
  EXPECT_DOUBLE_EQ(r.radius(), 0.25);
  EXPECT_EQ(r.center(0), (StatePoint{0.5}));
  EXPECT_EQ(sorted_axis(r, 0), (std::vector<double>{0.25, 0.5, 0.75}));

  const auto dropped = refine_cover(c, 0.5, {{0.2}}, 0.25);
  EXPECT_EQ(sorted_axis(dropped, 0), (std::vector<double>{0.5, 0.75}));

  const auto two_d = refine_cover(build_cover(unit(2), 0.5), 0.5, {}, 0.25);
  EXPECT_EQ(two_d.size(), 5u);

  EXPECT_THROW(refine_cover(c, 1.0, {}, 0.1), std::invalid_argument);
  EXPECT_THROW(refine_cover(c, 0.0, {}, 0.1), std::invalid_argument);
}

TEST(RefineCover, KeepsOrdinalsAndInactiveFlags) {
  auto c = build_cover(unit(2), 0.25);
  c.deactivate(1);
  const auto r = refine_cover(c, 0.5, {}, 0.125);
  for (std::size_t i = 0; i < c.size(); ++i) {
    EXPECT_EQ(r.center(i), c.center(i));
    EXPECT_EQ(r.is_active(i), c.is_active(i));
  }
  // Nothing new inside the footprint of the inactive cell.
  for (std::size_t i = c.size(); i < r.size(); ++i)
    EXPECT_GT(linf_distance(r.center(i), c.center(1)), 0.25 - 1e-12);
}

TEST(RefineCover, SoundnessAndFootprintProperty) {
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const BoxRegion box({0, 0}, {rng.uniform(1, 5), rng.uniform(1, 5)});
    const double delta = rng.uniform(0.2, 0.8);
    const double gamma = rng.uniform(0.3, 0.7);
    const auto c = build_cover(box, delta);
    std::vector<StatePoint> excluded;
    for (int k = 0; k < 3; ++k) excluded.push_back(rng.point_in(box));
    const double margin = gamma * delta;
    const auto plain = refine_cover(c, gamma, {}, margin);
    const auto r = refine_cover(c, gamma, excluded, margin);
    for (const auto& p : r.centers()) EXPECT_TRUE(box.contains(p));
    for (int k = 0; k < 300; ++k) {
      const auto p = rng.point_in(box);
      // Without exclusions the old footprint stays covered at the new radius.
      EXPECT_LE(plain.distance(p), gamma * delta + 1e-12);
      bool near_excluded = false;
      for (const auto& e : excluded)
        near_excluded = near_excluded || linf_distance(p, e) <= 2 * margin;
      if (!near_excluded) EXPECT_LE(r.distance(p), gamma * delta + 1e-12);
    }
  }
}

TEST(BoundaryBand, Examples) {
  const BoxRegion line({0.0}, {10.0});
  const BoundaryBand band(line, 1.0);
  EXPECT_TRUE(band(std::vector<double>{0.5}));
  EXPECT_TRUE(band(std::vector<double>{9.5}));
  EXPECT_TRUE(band(std::vector<double>{1.0}));
  EXPECT_FALSE(band(std::vector<double>{5.0}));
  EXPECT_FALSE(band(std::vector<double>{11.0}));

  const BoundaryBand wide(line, 6.0);
  for (double x = 0.0; x <= 10.0; x += 0.25) EXPECT_TRUE(wide(std::vector<double>{x}));

  const BoundaryBand sq(BoxRegion({0, 0}, {10, 10}), 1.0);
  EXPECT_TRUE(sq(std::vector<double>{5, 0.5}));
  EXPECT_THROW(BoundaryBand(line, 0.0), std::invalid_argument);
}

TEST(VolumeEstimate, Examples) {
  EXPECT_DOUBLE_EQ(volume_estimate(build_cover(unit(2), 0.25)), 1.0);
  EXPECT_DOUBLE_EQ(volume_estimate(DeltaCover(unit(2), 0.25)), 0.0);

  DeltaCover inner(unit(2), 0.3);
  inner.add({0.7, 0.7});  // cell [0.4, 1.0]^2 fits entirely
  EXPECT_NEAR(volume_estimate(inner), 0.36, 1e-12);
  DeltaCover corner(unit(2), 0.3);
  corner.add({1.0, 1.0});  // only the quarter [0.7, 1]^2 is inside
  EXPECT_NEAR(volume_estimate(corner), 0.09, 1e-12);
}

TEST(VolumeEstimate, ConvergesToBoxVolume) {
  const BoxRegion box({0, 0, 0}, {1.3, 2.2, 0.7});
  // Overlap from the clamped last row shrinks with delta, if not monotonically.
  double err = INFINITY;
  for (double delta : {0.4, 0.2, 0.1, 0.05, 0.01}) {
    const auto c = build_cover(box, delta);
    const double v = volume_estimate(c);
    EXPECT_GE(v, box.volume() - 1e-9);
    err = (v - box.volume()) / box.volume();
  }
  EXPECT_LT(err, 0.05);
}

TEST(Rasterize, CountsOnlyStrictlyInteriorCenters) {
  const BoxRegion box({0.0}, {4.0});
  const auto grid = build_cover(box, 0.5);  // centers 0.5, 1.5, 2.5, 3.5
  DeltaCover c(box, 0.5);
  c.add({1.0});  // on the boundary of two grid cells
  c.add({2.6});
  const auto m = rasterize(c, grid);
  EXPECT_EQ(m, (std::vector<char>{0, 0, 1, 0}));
}

TEST(CoverCsv, RoundTripAndFormat) {
  EXPECT_EQ(format_sig9(0.25), "0.250000000");
  EXPECT_EQ(format_sig9(13952.0), "13952.0000");
  EXPECT_EQ(format_sig9(-5.5), "-5.50000000");
  EXPECT_EQ(format_sig9(0.0), "0.00000000");

  const BoxRegion box({0, 5.5}, {16, 60});
  auto c = build_cover(box, 2.0);
  c.deactivate(3);
  std::ostringstream os;
  write_cover_csv(os, c, "abc");
  const auto text = os.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "# config_digest=abc");
  EXPECT_NE(text.find("dim,delta\n2,2.00000000\n"), std::string::npos);
  std::istringstream is(text);
  const auto back = read_cover_csv(is, box);
  EXPECT_EQ(back.size(), c.active_count());
  EXPECT_DOUBLE_EQ(back.radius(), 2.0);
  EXPECT_EQ(back.centers(), c.active_centers());
}

TEST(PointCloud, DistancesAreExact) {
  PointCloud pc({0.0, 0.0}, 0.5);
  EXPECT_EQ(pc.min_distance(std::vector<double>{1, 1}), INFINITY);
  pc.insert({1, 1});
  pc.insert({5, 5});
  EXPECT_DOUBLE_EQ(pc.min_distance(std::vector<double>{1.2, 0.7}), 0.3);
  EXPECT_DOUBLE_EQ(pc.min_distance(std::vector<double>{3.5, 3}), 2.0);
  EXPECT_TRUE(pc.any_within(std::vector<double>{1.2, 0.7}, 0.3 + 1e-12));
  EXPECT_FALSE(pc.any_within(std::vector<double>{1.2, 0.7}, 0.29));
  EXPECT_TRUE(pc.any_within(std::vector<double>{3.5, 3}, 2.0));
}

}  // namespace
