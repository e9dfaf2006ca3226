#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace npsim {

enum class RingPut : std::uint8_t { Accepted, Blocked };

/// Bounded FIFO between pipeline stages. A full ring never drops: put()
/// reports Blocked, leaves the argument untouched and the producer retries.
template <typename T>
class RingBuffer {
 public:
  explicit RingBuffer(std::size_t capacity) : slots_(capacity) {
    if (capacity == 0) throw std::invalid_argument("ring capacity must be positive");
  }

  RingPut put(T&& item) {
    if (full()) return RingPut::Blocked;
    slots_[put_count_ % slots_.size()].emplace(std::move(item));
    ++put_count_;
    return RingPut::Accepted;
  }

  std::optional<T> get() {
    if (empty()) return std::nullopt;
    auto& slot = slots_[get_count_ % slots_.size()];
    std::optional<T> out = std::move(slot);
    slot.reset();
    ++get_count_;
    return out;
  }

  const T* peek() const { return empty() ? nullptr : &*slots_[get_count_ % slots_.size()]; }

  std::size_t capacity() const { return slots_.size(); }
  std::size_t occupancy() const { return static_cast<std::size_t>(put_count_ - get_count_); }
  bool empty() const { return put_count_ == get_count_; }
  bool full() const { return occupancy() == slots_.size(); }
  std::uint64_t put_count() const { return put_count_; }
  std::uint64_t get_count() const { return get_count_; }

 private:
  std::vector<std::optional<T>> slots_;
  std::uint64_t put_count_ = 0;
  std::uint64_t get_count_ = 0;
};

}  // namespace npsim
