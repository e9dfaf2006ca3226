#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "npsim/model.hpp"
#include "npsim/ring_buffer.hpp"

namespace npsim {

inline constexpr std::size_t kReceiveContexts = 8;
inline constexpr std::uint32_t kBufferBytes = 8192;

struct ThreadContext {
  std::uint8_t index = 0;
  SimTime busy_until;
  std::optional<PacketId> holding;
};

/// Receive microengine model: an RBUF element pool feeding eight thread
/// contexts that take packets round-robin and commit them downstream in
/// exactly arrival order. A context that finishes early keeps its packet
/// until every earlier packet has been committed.
class ReceiveStage {
 public:
  struct Dispatch {
    std::uint8_t context = 0;
    SimTime done_at;
  };

  explicit ReceiveStage(std::uint32_t rbuf_elements = kBufferBytes / kElementBytes);

  /// Holds the packet in RBUF until a context takes it. Returns false, with
  /// the packet left with the caller, if the RBUF lacks free elements.
  bool admit(Packet& pkt, SimTime service_time);

  /// Hands waiting packets to contexts in strict round-robin order.
  std::vector<Dispatch> dispatch(SimTime now);

  /// Marks a context's processing as finished.
  void complete(std::uint8_t context);

  /// Commits finished packets in arrival order while `sink` accepts them.
  /// The sink receives an rvalue it may move from only when returning true.
  std::size_t commit(const std::function<bool(Packet&&)>& sink);

  std::span<const ThreadContext, kReceiveContexts> contexts() const { return contexts_; }
  std::uint32_t rbuf_capacity() const { return rbuf_capacity_; }
  std::uint32_t rbuf_used() const { return rbuf_used_; }
  std::uint32_t rbuf_used_by_port(PortId ingress) const;
  std::size_t waiting() const { return waiting_.size(); }
  /// Packets held anywhere in the stage (RBUF wait list or a context).
  std::size_t resident() const;
  std::uint64_t committed() const { return committed_; }

 private:
  struct Held {
    Packet packet;
    SimTime service;
    std::vector<MPacket> segments;
  };
  struct Slot {
    std::optional<Held> held;
    bool done = false;
  };

  std::uint32_t rbuf_capacity_;
  std::uint32_t rbuf_used_ = 0;
  std::array<std::uint32_t, kIngressPorts> rbuf_by_port_{};
  std::deque<Held> waiting_;
  std::array<ThreadContext, kReceiveContexts> contexts_{};
  std::array<Slot, kReceiveContexts> slots_{};
  std::uint8_t next_dispatch_ = 0;
  std::uint8_t next_commit_ = 0;
  std::uint64_t committed_ = 0;
};

struct TimedArrival {
  SimTime at;
  PacketId id = 0;
  SimTime service;
};

/// Runs a stand-alone receive stage over `arrivals` (ordered by time) with
/// an unbounded downstream and returns the committed id sequence.
std::vector<PacketId> receive_dispatch(std::span<const TimedArrival> arrivals);

}  // namespace npsim
