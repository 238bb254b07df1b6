#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "setquant/geometry.hpp"

namespace setquant {

/// Mixes a master seed with a stream id (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

/*
 * Seeded stream. The uniform mapping is written out by hand so that draws
 * are identical across standard library implementations.
 */
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform on [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n);
  /// Uniform point in the box (empty vector for a 0-dimensional box).
  std::vector<double> point_in(const BoxRegion& box);

 private:
  std::mt19937_64 engine_;
};

}  // namespace setquant
