#include "setquant/replay_buffer.hpp"

#include <cstdint>
#include <stdexcept>

namespace setquant {

namespace {

void put_u64(std::FILE* f, std::uint64_t v) {
  if (std::fwrite(&v, sizeof v, 1, f) != 1)
    throw std::runtime_error("replay spill: write failed");
}

std::uint64_t get_u64(std::FILE* f) {
  std::uint64_t v;
  if (std::fread(&v, sizeof v, 1, f) != 1)
    throw std::runtime_error("replay spill: truncated file");
  return v;
}

}  // namespace

ReplayBuffer::ReplayBuffer(std::size_t memory_cap) : cap_(memory_cap) {}
ReplayBuffer::~ReplayBuffer() = default;
ReplayBuffer::ReplayBuffer(ReplayBuffer&&) noexcept = default;
ReplayBuffer& ReplayBuffer::operator=(ReplayBuffer&&) noexcept = default;

void ReplayBuffer::push(StoredRollout r) {
  if (memory_.size() < cap_) {
    memory_.push_back(std::move(r));
    return;
  }
  if (!spill_) {
    spill_.reset(std::tmpfile());
    if (!spill_) throw std::runtime_error("replay spill: cannot open temp file");
  }
  std::FILE* f = spill_.get();
  std::fseek(f, 0, SEEK_END);
  const std::uint64_t dim = r.states.empty() ? 0 : r.states.front().size();
  put_u64(f, r.start_ordinal);
  put_u64(f, r.unsafe_exit ? 1 : 0);
  put_u64(f, r.states.size());
  put_u64(f, dim);
  for (const auto& s : r.states) {
    if (std::fwrite(s.data(), sizeof(double), dim, f) != dim)
      throw std::runtime_error("replay spill: write failed");
  }
  ++spilled_;
}

void ReplayBuffer::for_each(
    const std::function<void(const StoredRollout&)>& fn) const {
  for (const auto& r : memory_) fn(r);
  if (!spill_) return;
  std::FILE* f = spill_.get();
  std::fflush(f);
  std::rewind(f);
  StoredRollout r;
  for (std::size_t k = 0; k < spilled_; ++k) {
    r.start_ordinal = get_u64(f);
    r.unsafe_exit = get_u64(f) != 0;
    const auto count = get_u64(f);
    const auto dim = get_u64(f);
    r.states.assign(count, StatePoint(dim));
    for (auto& s : r.states) {
      if (std::fread(s.data(), sizeof(double), dim, f) != dim)
        throw std::runtime_error("replay spill: truncated file");
    }
    fn(r);
  }
}

}  // namespace setquant
