#include "npsim/model.hpp"

#include <string>

#include "npsim/errors.hpp"
#include "npsim/rng.hpp"

namespace npsim {

std::uint64_t hash_flow_key(const FlowKey& key) {
  std::uint64_t h = splitmix64((std::uint64_t{key.src_addr} << 32) | key.dst_addr);
  h = splitmix64(h ^ ((std::uint64_t{key.src_port} << 32) | (std::uint64_t{key.dst_port} << 8) |
                      static_cast<std::uint64_t>(key.protocol)));
  return h;
}

std::string_view to_string(Protocol p) {
  switch (p) {
    case Protocol::TCP:
      return "TCP";
    case Protocol::UDP:
      return "UDP";
    case Protocol::RTP_UDP:
      return "RTP_UDP";
  }
  return "?";
}

std::string_view to_string(TrafficClass c) {
  switch (c) {
    case TrafficClass::BE:
      return "BE";
    case TrafficClass::AF:
      return "AF";
    case TrafficClass::EF:
      return "EF";
    case TrafficClass::PRIV:
      return "PRIV";
  }
  return "?";
}

std::string_view to_string(PacketKind k) {
  switch (k) {
    case PacketKind::RTP_UDP:
      return "RTP_UDP";
    case PacketKind::UDP_LARGE_TTL:
      return "UDP_LARGE_TTL";
    case PacketKind::UDP_SMALL_TTL:
      return "UDP_SMALL_TTL";
    case PacketKind::TCP:
      return "TCP";
  }
  return "?";
}

std::string_view to_string(PacketFate f) {
  switch (f) {
    case PacketFate::InFlight:
      return "InFlight";
    case PacketFate::Transmitted:
      return "Transmitted";
    case PacketFate::DroppedQueueFull:
      return "DroppedQueueFull";
    case PacketFate::DroppedDeferredFull:
      return "DroppedDeferredFull";
    case PacketFate::DroppedTTL:
      return "DroppedTTL";
    case PacketFate::DroppedRed:
      return "DroppedRed";
  }
  return "?";
}

std::optional<Protocol> parse_protocol(std::string_view s) {
  for (auto p : {Protocol::TCP, Protocol::UDP, Protocol::RTP_UDP}) {
    if (to_string(p) == s) return p;
  }
  return std::nullopt;
}

std::optional<TrafficClass> parse_traffic_class(std::string_view s) {
  for (auto c : kAllClasses) {
    if (to_string(c) == s) return c;
  }
  return std::nullopt;
}

std::optional<PacketKind> parse_packet_kind(std::string_view s) {
  for (auto k : {PacketKind::RTP_UDP, PacketKind::UDP_LARGE_TTL, PacketKind::UDP_SMALL_TTL,
                 PacketKind::TCP}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

void Packet::mark_enqueued(SimTime t) {
  if (is_final()) {
    throw SimulationError("packet " + std::to_string(id) + ": enqueue after terminal fate");
  }
  if (t < t_created) {
    throw SimulationError("packet " + std::to_string(id) + ": enqueued before creation");
  }
  t_enqueued = t;
}

void Packet::mark_transmitted(SimTime t) {
  if (is_final()) {
    throw SimulationError("packet " + std::to_string(id) + ": fate already " +
                          std::string(to_string(fate_)));
  }
  if (!t_enqueued || t < *t_enqueued) {
    throw SimulationError("packet " + std::to_string(id) + ": departed before enqueue");
  }
  t_departed = t;
  fate_ = PacketFate::Transmitted;
}

void Packet::mark_dropped(PacketFate f) {
  if (!is_drop(f)) {
    throw SimulationError("mark_dropped called with non-drop fate");
  }
  if (is_final()) {
    throw SimulationError("packet " + std::to_string(id) + ": fate already " +
                          std::string(to_string(fate_)));
  }
  fate_ = f;
}

std::vector<MPacket> segment_packet(const Packet& p, std::uint32_t element_size) {
  if (p.size_bytes == 0) throw MalformedPacket("zero-size packet cannot be segmented");
  if (element_size == 0) throw MalformedPacket("element size must be positive");

  const std::uint32_t count = elements_for(p.size_bytes, element_size);
  std::vector<MPacket> out;
  out.reserve(count);
  std::uint32_t remaining = p.size_bytes;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t chunk = remaining < element_size ? remaining : element_size;
    out.push_back(MPacket{p.id, i, chunk, i == 0, i + 1 == count});
    remaining -= chunk;
  }
  return out;
}

Reassembled reassemble(std::span<const MPacket> segments) {
  if (segments.empty()) throw ReassemblyError("no segments");
  const PacketId parent = segments.front().parent_id;
  std::uint32_t total = 0;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const MPacket& m = segments[i];
    if (m.parent_id != parent) {
      throw ReassemblyError("segment " + std::to_string(i) + " belongs to packet " +
                            std::to_string(m.parent_id));
    }
    if (m.index != i) {
      throw ReassemblyError("packet " + std::to_string(parent) + ": expected index " +
                            std::to_string(i) + ", got " + std::to_string(m.index));
    }
    if (m.sop != (i == 0)) {
      throw ReassemblyError("packet " + std::to_string(parent) + ": misplaced start-of-packet");
    }
    if (m.eop != (i + 1 == segments.size())) {
      throw ReassemblyError("packet " + std::to_string(parent) + ": misplaced end-of-packet");
    }
    if (m.payload_bytes == 0) {
      throw ReassemblyError("packet " + std::to_string(parent) + ": empty segment");
    }
    total += m.payload_bytes;
  }
  return Reassembled{parent, total};
}

}  // namespace npsim
