#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace npsim {

/// Simulated time as an integer count of nanoseconds since simulation start.
struct SimTime {
  std::uint64_t ns = 0;

  static constexpr SimTime from_ns(std::uint64_t v) { return SimTime{v}; }
  static constexpr SimTime from_us(std::uint64_t v) { return SimTime{v * 1'000}; }
  static constexpr SimTime from_ms(std::uint64_t v) { return SimTime{v * 1'000'000}; }

  constexpr double to_ms() const { return static_cast<double>(ns) / 1e6; }

  constexpr auto operator<=>(const SimTime&) const = default;

  constexpr SimTime& operator+=(SimTime d) {
    ns += d.ns;
    return *this;
  }
  friend constexpr SimTime operator+(SimTime a, SimTime b) { return SimTime{a.ns + b.ns}; }
  // Saturates at zero; durations are never negative.
  friend constexpr SimTime operator-(SimTime a, SimTime b) {
    return SimTime{a.ns >= b.ns ? a.ns - b.ns : 0};
  }
};

using PacketId = std::uint64_t;
using PortId = std::uint8_t;

/// Egress ports 0-4 and ingress ports 0-1 of the modeled device.
inline constexpr std::size_t kEgressPorts = 5;
inline constexpr std::size_t kIngressPorts = 2;

/// RBUF/TBUF transfer element size in bytes.
inline constexpr std::uint32_t kElementBytes = 64;
inline constexpr std::uint32_t kMinPacketBytes = 20;

/// Number of elements a packet of `size_bytes` occupies (ceiling division).
constexpr std::uint32_t elements_for(std::uint32_t size_bytes,
                                     std::uint32_t element_size = kElementBytes) {
  return (size_bytes + element_size - 1) / element_size;
}

/// Time to put `size_bytes` on a link of `rate_bps`, rounded half up to whole ns.
constexpr SimTime serialization_time(std::uint64_t size_bytes, std::uint64_t rate_bps) {
  const std::uint64_t bit_ns = size_bytes * 8ULL * 1'000'000'000ULL;
  return SimTime{(2 * bit_ns + rate_bps) / (2 * rate_bps)};
}

enum class Protocol : std::uint8_t { TCP, UDP, RTP_UDP };

struct FlowKey {
  std::uint32_t src_addr = 0;
  std::uint32_t dst_addr = 0;
  std::uint16_t src_port = 0;
  std::uint16_t dst_port = 0;
  Protocol protocol = Protocol::UDP;

  constexpr auto operator<=>(const FlowKey&) const = default;
};

/// Pinned 64-bit hash of the 5-tuple. Changing it changes ingress-port
/// assignment and therefore every golden stream.
std::uint64_t hash_flow_key(const FlowKey& key);

struct FlowKeyHash {
  std::size_t operator()(const FlowKey& key) const noexcept {
    return static_cast<std::size_t>(hash_flow_key(key));
  }
};

/// DiffServ-style class. Enumerator values give the total order
/// PRIV > EF > AF > BE, so built-in comparisons express priority.
enum class TrafficClass : std::uint8_t { BE = 0, AF = 1, EF = 2, PRIV = 3 };
inline constexpr std::size_t kClassCount = 4;
inline constexpr TrafficClass kAllClasses[kClassCount] = {TrafficClass::BE, TrafficClass::AF,
                                                          TrafficClass::EF, TrafficClass::PRIV};

constexpr std::size_t index_of(TrafficClass c) { return static_cast<std::size_t>(c); }
constexpr bool is_high_priority(TrafficClass c) { return c >= TrafficClass::EF; }

/// Generator-side label of a flow's traffic type.
enum class PacketKind : std::uint8_t { RTP_UDP, UDP_LARGE_TTL, UDP_SMALL_TTL, TCP };
inline constexpr std::size_t kKindCount = 4;

constexpr Protocol protocol_of(PacketKind k) {
  switch (k) {
    case PacketKind::RTP_UDP:
      return Protocol::RTP_UDP;
    case PacketKind::TCP:
      return Protocol::TCP;
    default:
      return Protocol::UDP;
  }
}

enum class PacketFate : std::uint8_t {
  InFlight,
  Transmitted,
  DroppedQueueFull,
  DroppedDeferredFull,
  DroppedTTL,
  DroppedRed,
};
inline constexpr std::size_t kFateCount = 6;

constexpr bool is_drop(PacketFate f) {
  return f != PacketFate::InFlight && f != PacketFate::Transmitted;
}

std::string_view to_string(Protocol p);
std::string_view to_string(TrafficClass c);
std::string_view to_string(PacketKind k);
std::string_view to_string(PacketFate f);
std::optional<Protocol> parse_protocol(std::string_view s);
std::optional<TrafficClass> parse_traffic_class(std::string_view s);
std::optional<PacketKind> parse_packet_kind(std::string_view s);

/// Active-network payload: the directive text as carried on the wire plus
/// the identifiers of nodes a TRACE directive has visited.
struct Capsule {
  std::string wire;
  std::vector<std::uint32_t> trace_log;

  bool operator==(const Capsule&) const = default;
};

/// One packet and its lifecycle. Timestamps and fate only move forward:
/// the mark_* methods throw SimulationError on any attempt to go back.
struct Packet {
  PacketId id = 0;
  FlowKey flow;
  std::uint32_t size_bytes = kElementBytes;
  std::uint8_t ttl = 64;
  PacketKind kind = PacketKind::UDP_LARGE_TTL;
  PortId ingress_port = 0;
  std::optional<TrafficClass> traffic_class;
  std::optional<PortId> egress_port;
  bool redirected = false;
  std::optional<Capsule> capsule;
  SimTime t_created;
  std::optional<SimTime> t_enqueued;
  std::optional<SimTime> t_departed;

  PacketFate fate() const { return fate_; }
  bool is_final() const { return fate_ != PacketFate::InFlight; }
  std::uint32_t elements() const { return elements_for(size_bytes); }

  void mark_enqueued(SimTime t);
  void mark_transmitted(SimTime t);
  void mark_dropped(PacketFate f);

 private:
  PacketFate fate_ = PacketFate::InFlight;
};

/// A 64-byte (by default) transfer element of a packet.
struct MPacket {
  PacketId parent_id = 0;
  std::uint32_t index = 0;
  std::uint32_t payload_bytes = 0;
  bool sop = false;
  bool eop = false;

  bool operator==(const MPacket&) const = default;
};

std::vector<MPacket> segment_packet(const Packet& p, std::uint32_t element_size = kElementBytes);

struct Reassembled {
  PacketId id = 0;
  std::uint32_t total_bytes = 0;
};

/// Inverse of segment_packet. Throws ReassemblyError on a missing or
/// duplicated index, a foreign parent id, or misplaced sop/eop flags.
Reassembled reassemble(std::span<const MPacket> segments);

}  // namespace npsim
