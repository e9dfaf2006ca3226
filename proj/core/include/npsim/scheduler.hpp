#pragma once

#include <cstdint>
#include <optional>

#include "npsim/classifier.hpp"
#include "npsim/egress_queue.hpp"
#include "npsim/model.hpp"

namespace npsim {

inline constexpr std::uint64_t kDefaultPortRateBps = 155'000'000;
inline constexpr std::uint32_t kDefaultFeedbackEvery = 16;

/// One egress link. At most one packet is on the wire at a time.
class PortLink {
 public:
  explicit PortLink(PortId port, std::uint64_t rate_bps = kDefaultPortRateBps);

  PortId port() const { return port_; }
  std::uint64_t rate_bps() const { return rate_bps_; }
  SimTime busy_until() const { return busy_until_; }
  bool idle(SimTime now) const { return !in_service_ && now >= busy_until_; }
  const Packet* in_service() const { return in_service_ ? &*in_service_ : nullptr; }
  std::uint64_t tx_count() const { return tx_count_; }
  std::uint64_t tx_bytes() const { return tx_bytes_; }

  /// Starts serializing `pkt`; returns the completion time. Throws
  /// SimulationError if the link is still busy.
  SimTime transmit(Packet&& pkt, SimTime now);

  /// Ends the current transmission: the packet is marked Transmitted at
  /// `now` and handed back.
  Packet complete(SimTime now);

 private:
  PortId port_;
  std::uint64_t rate_bps_;
  SimTime busy_until_;
  std::optional<Packet> in_service_;
  std::uint64_t tx_count_ = 0;
  std::uint64_t tx_bytes_ = 0;
};

/// Strict priority: PRIV, then EF, AF, BE; FIFO by (t_enqueued, id) within a class.
inline std::optional<Packet> select_next(EgressQueue& q) { return q.pop_next(); }

/// Every `every_n` transmissions on a port, refreshes the classifier's view of
/// that port with (tx_count, occupancy). Returns true when it published.
bool publish_tx_feedback(const PortLink& link, std::uint32_t occupancy, Classifier& classifier,
                         std::uint32_t every_n = kDefaultFeedbackEvery);

}  // namespace npsim
