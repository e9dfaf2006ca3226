#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <functional>
#include <optional>

#include "npsim/model.hpp"

namespace npsim {

inline constexpr double kDefaultSoftThreshold = 0.85;
inline constexpr std::uint32_t kDefaultDeferredCapacity = 512;

/// floor(fraction * capacity), the soft watermark in elements.
std::uint32_t threshold_elements(double fraction, std::uint32_t capacity_elems);

/// Per-port transmit queue modeled on TBUF elements. Occupancy counts the
/// elements of queued packets plus the packet on the wire: elements are
/// released only when its transmission completes.
///
/// Queued packets are kept per class, each class ordered by
/// (t_enqueued, id). The deferred list is the local-memory overflow used by
/// the priority-overflow policy; packets there hold no TBUF elements.
class EgressQueue {
 public:
  EgressQueue(PortId port, std::uint32_t capacity_elems,
              double soft_threshold = kDefaultSoftThreshold,
              std::uint32_t deferred_capacity = kDefaultDeferredCapacity);

  PortId port() const { return port_; }
  std::uint32_t capacity() const { return capacity_; }
  std::uint32_t occupancy() const { return occupancy_; }
  std::uint32_t soft_threshold() const { return soft_threshold_; }
  bool fits(std::uint32_t elems) const { return occupancy_ + elems <= capacity_; }

  /// Sets the soft threshold to floor(fraction * capacity); fraction in (0, 1].
  void set_soft_threshold(double fraction);

  /// Takes a packet with t_enqueued set. Throws SimulationError if it does
  /// not fit: callers check fits() first.
  void admit(Packet&& pkt);

  /// Removes the highest-class packet (earliest within its class). Its
  /// elements stay occupied until release().
  std::optional<Packet> pop_next();
  void release(std::uint32_t elems);

  std::size_t queued() const;
  std::size_t queued(TrafficClass c) const { return by_class_[index_of(c)].size(); }
  std::optional<TrafficClass> highest_queued() const;
  void for_each_queued(const std::function<void(const Packet&)>& fn) const;

  bool admitting() const { return admitting_; }
  void stop_admitting() { admitting_ = false; }
  void resume_admitting() { admitting_ = true; }

  std::size_t deferred_capacity() const { return deferred_capacity_; }
  std::size_t deferred_size() const { return deferred_.size(); }
  bool deferred_full() const { return deferred_.size() >= deferred_capacity_; }
  void defer(Packet&& pkt);
  const Packet& deferred_front() const { return deferred_.front(); }
  Packet take_deferred();

 private:
  PortId port_;
  std::uint32_t capacity_;
  std::uint32_t soft_threshold_;
  std::uint32_t occupancy_ = 0;
  std::array<std::deque<Packet>, kClassCount> by_class_;
  std::deque<Packet> deferred_;
  std::size_t deferred_capacity_;
  bool admitting_ = true;
};

}  // namespace npsim
