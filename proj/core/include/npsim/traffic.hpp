#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "npsim/model.hpp"
#include "npsim/rng.hpp"

namespace npsim {

struct FixedSize {
  std::uint32_t bytes = 64;
  bool operator==(const FixedSize&) const = default;
};

struct UniformSize {
  std::uint32_t lo = 64;
  std::uint32_t hi = 1500;
  bool operator==(const UniformSize&) const = default;
};

using SizeModel = std::variant<FixedSize, UniformSize>;

struct KindWeight {
  PacketKind kind = PacketKind::RTP_UDP;
  double weight = 1.0;
  bool operator==(const KindWeight&) const = default;
};

/// A capsule the generator injects on the control flow at or after `at`.
struct ScheduledCapsule {
  SimTime at;
  std::string wire;
  bool operator==(const ScheduledCapsule&) const = default;
};

// TTL populations for the two UDP flavours; small-TTL packets may expire here.
inline constexpr std::uint8_t kLargeTtlMin = 64;
inline constexpr std::uint8_t kLargeTtlMax = 255;
inline constexpr std::uint8_t kSmallTtlMin = 1;
inline constexpr std::uint8_t kSmallTtlMax = 4;
inline constexpr std::uint8_t kDefaultTtl = 64;

inline constexpr std::uint32_t kMaxPacketBytes = 9000;

std::vector<KindWeight> uniform_mix();

struct TrafficConfig {
  std::uint64_t aggregate_rate_bps = 1'000'000'000;
  SimTime inter_packet_gap = SimTime::from_ns(96);
  std::uint32_t flow_count = 64;
  SimTime start_window = SimTime::from_ms(40);
  std::vector<KindWeight> mix = uniform_mix();
  SizeModel size_model = FixedSize{64};
  SimTime duration = SimTime::from_ms(60);
  std::uint64_t seed = 1;
  std::vector<ScheduledCapsule> capsules;

  /// Throws ConfigError naming the first offending field.
  void validate() const;

  bool operator==(const TrafficConfig&) const = default;
};

struct ArrivalEvent {
  SimTime at;
  Packet packet;
  PortId ingress_port = 0;
};

/// Addressing of generated flows: src 10.0.x.y, dst 192.168.x.y where x.y is
/// the flow index, destination port by kind (RTP 5004, UDP 9000, TCP 80).
FlowKey flow_key_for(std::uint32_t flow_index, PacketKind kind);

/// The flow that carries injected capsules.
FlowKey control_flow_key();

/// Ingress port of a flow: parity of its pinned hash.
PortId ingress_port_for(const FlowKey& key);

/// Constant-aggregate-rate arrival stream. Each flow has a fixed kind and a
/// start time drawn uniformly in the start window. For every packet the kind
/// is drawn by weight among kinds with at least one started flow, then the
/// flow uniformly among that kind's started flows.
class TrafficGenerator {
 public:
  explicit TrafficGenerator(TrafficConfig cfg);

  std::optional<ArrivalEvent> next_arrival();

  const TrafficConfig& config() const { return cfg_; }
  SimTime flow_start(std::uint32_t flow) const { return flows_[flow].start; }
  PacketKind flow_kind(std::uint32_t flow) const { return flows_[flow].kind; }
  std::uint64_t emitted() const { return next_id_; }

 private:
  struct Flow {
    FlowKey key;
    PacketKind kind;
    SimTime start;
    PortId ingress;
  };

  void admit_started_flows(SimTime now);
  std::uint32_t draw_size();
  std::uint8_t draw_ttl(PacketKind kind);

  TrafficConfig cfg_;
  Rng rng_;
  std::vector<Flow> flows_;
  std::vector<std::uint32_t> start_order_;
  std::size_t started_ = 0;
  std::array<std::vector<std::uint32_t>, kKindCount> started_by_kind_;
  std::array<double, kKindCount> kind_weight_{};
  std::size_t next_capsule_ = 0;
  SimTime next_time_;
  PacketId next_id_ = 0;
  bool exhausted_ = false;
};

inline TrafficGenerator build_generator(const TrafficConfig& cfg) { return TrafficGenerator(cfg); }

}  // namespace npsim
