#pragma once

#include <cstddef>
#include <cstdio>
#include <functional>
#include <memory>
#include <vector>

#include "setquant/geometry.hpp"

namespace setquant {

/// A stored rollout: the start vertex and the visited states.
struct StoredRollout {
  std::size_t start_ordinal = 0;
  bool unsafe_exit = false;
  std::vector<StatePoint> states;
};

/*
 * Append-only rollout store. Entries beyond `memory_cap` are written to an
 * anonymous temporary file and read back in insertion order on traversal.
 */
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t memory_cap = 1u << 16);
  ~ReplayBuffer();
  ReplayBuffer(ReplayBuffer&&) noexcept;
  ReplayBuffer& operator=(ReplayBuffer&&) noexcept;

  void push(StoredRollout r);
  std::size_t size() const { return memory_.size() + spilled_; }
  std::size_t spilled() const { return spilled_; }
  bool empty() const { return size() == 0; }

  /// Visits every entry in insertion order.
  void for_each(const std::function<void(const StoredRollout&)>& fn) const;

 private:
  struct FileCloser {
    void operator()(std::FILE* f) const {
      if (f) std::fclose(f);
    }
  };
  std::size_t cap_;
  std::vector<StoredRollout> memory_;
  std::unique_ptr<std::FILE, FileCloser> spill_;
  std::size_t spilled_ = 0;
};

}  // namespace setquant
