#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "npsim/model.hpp"

namespace npsim {

enum class EventKind : std::uint8_t {
  Arrive,
  Enqueue,
  Redirect,
  Defer,
  Promote,
  Transmit,
  DropQueueFull,
  DropDeferredFull,
  DropTtl,
  DropRed,
};
inline constexpr std::size_t kEventKindCount = 10;

std::string_view to_string(EventKind k);
std::optional<EventKind> parse_event_kind(std::string_view s);
std::optional<PacketFate> terminal_fate(EventKind k);

/// One step of a packet's life. `port` is the ingress port for Arrive and
/// the egress port otherwise; both class and port are absent when unknown.
struct LifecycleEvent {
  SimTime at;
  PacketId id = 0;
  EventKind kind = EventKind::Arrive;
  std::optional<TrafficClass> traffic_class;
  std::optional<PortId> port;
  std::uint32_t bytes = 0;

  bool operator==(const LifecycleEvent&) const = default;
};

/// Event-log line: `<time_ns> <packet_id> <event_kind> <class> <port> <bytes>`,
/// with `-` for an absent class or port.
std::string format_event(const LifecycleEvent& e);
std::optional<LifecycleEvent> parse_event(std::string_view line);

/// Half-open interval [begin, end).
struct TimeWindow {
  SimTime begin;
  SimTime end;
};

struct RunMetadata {
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
  std::uint64_t arrival_hash = 0;
  std::string policy;
  SimTime duration;
};

/// Counters built only from lifecycle events, so a recorded event log
/// replays into identical counters. Terminal packets are tallied per
/// (class, port, fate); unclassified packets use the absent class/port slot.
class MetricCounters {
 public:
  explicit MetricCounters(std::size_t egress_ports = kEgressPorts);

  /// Exactly one counter bump per event. Throws AuditError on a second
  /// terminal event, or any event, for a packet that is not live.
  void record(const LifecycleEvent& e);

  std::size_t egress_ports() const { return ports_; }

  std::uint64_t packets(std::optional<TrafficClass> c, std::optional<PortId> p, PacketFate f) const;
  std::uint64_t bytes(std::optional<TrafficClass> c, std::optional<PortId> p, PacketFate f) const;

  std::uint64_t generated() const { return generated_; }
  std::uint64_t with_fate(PacketFate f) const { return by_fate_[static_cast<std::size_t>(f)]; }
  std::uint64_t transmitted() const { return with_fate(PacketFate::Transmitted); }
  std::uint64_t dropped() const;
  /// Packets that arrived and have no terminal event yet.
  std::uint64_t resident() const { return live_.size(); }

  /// Packets of class `c` that reached an admission decision.
  std::uint64_t offered(TrafficClass c) const { return offered_[index_of(c)]; }
  std::uint64_t class_drops(TrafficClass c) const { return class_drops_[index_of(c)]; }
  std::uint64_t events(EventKind k, TrafficClass c) const {
    return by_kind_class_[static_cast<std::size_t>(k)][index_of(c)];
  }
  std::uint64_t events(EventKind k) const { return by_kind_[static_cast<std::size_t>(k)]; }

  std::uint64_t rx_packets(PortId ingress) const { return rx_times_.at(ingress).size(); }
  std::uint64_t tx_packets(PortId port) const { return tx_times_.at(port).size(); }
  std::uint64_t tx_bytes(PortId port) const;

  const std::vector<std::uint64_t>& delay_samples(TrafficClass c) const {
    return delays_[index_of(c)];
  }

  std::uint64_t offered_in(TrafficClass c, TimeWindow w) const;
  std::uint64_t dropped_in(TrafficClass c, TimeWindow w) const;
  std::uint64_t rx_in(PortId ingress, TimeWindow w) const;
  std::uint64_t tx_packets_in(PortId port, TimeWindow w) const;
  std::uint64_t tx_bytes_in(PortId port, TimeWindow w) const;

  SimTime last_event_time() const { return last_time_; }

  /// Compares every counter and series; metadata is ignored.
  bool operator==(const MetricCounters& other) const;

  RunMetadata metadata;

 private:
  void count_kind(const LifecycleEvent& e);
  std::size_t cell(std::optional<TrafficClass> c, std::optional<PortId> p, PacketFate f) const;

  std::size_t ports_;
  std::vector<std::uint64_t> packets_;
  std::vector<std::uint64_t> bytes_;
  std::uint64_t generated_ = 0;
  std::array<std::uint64_t, kFateCount> by_fate_{};
  std::array<std::uint64_t, kClassCount> offered_{};
  std::array<std::uint64_t, kClassCount> class_drops_{};
  std::array<std::uint64_t, kEventKindCount> by_kind_{};
  std::array<std::array<std::uint64_t, kClassCount>, kEventKindCount> by_kind_class_{};
  std::array<std::vector<std::uint64_t>, kClassCount> delays_;
  std::array<std::vector<SimTime>, kClassCount> offered_times_;
  std::array<std::vector<SimTime>, kClassCount> drop_times_;
  std::array<std::vector<SimTime>, kIngressPorts> rx_times_;
  std::vector<std::vector<SimTime>> tx_times_;
  std::vector<std::vector<std::uint64_t>> tx_cum_bytes_;
  std::unordered_map<PacketId, std::optional<SimTime>> live_;
  SimTime last_time_;
  std::optional<PacketId> last_arrival_;
};

/// dropped / offered for class `c`, over the whole run or a window. Absent
/// when nothing was offered in scope.
std::optional<double> loss_rate(const MetricCounters& m, TrafficClass c,
                                std::optional<TimeWindow> window = std::nullopt);

/// Queuing delay (t_departed - t_enqueued) statistics in ns. Percentiles use
/// the nearest-rank definition: the ceil(q * n)-th smallest sample.
struct DelayStats {
  double mean = 0.0;
  std::uint64_t p50 = 0;
  std::uint64_t p99 = 0;
  std::uint64_t max = 0;
  std::size_t samples = 0;
};

std::optional<DelayStats> delay_stats(const MetricCounters& m, TrafficClass c);

/// Aggregate bits per second transmitted on `port` within `w`.
double throughput_bps(const MetricCounters& m, PortId port, TimeWindow w);

/// Buffer fullness supplied by the simulator; metrics alone do not know it.
struct BufferLevels {
  std::array<std::uint32_t, kIngressPorts> rx_elements{};
  std::uint32_t rx_capacity = 128;
  std::vector<std::uint32_t> tx_elements;
  std::vector<std::uint32_t> tx_capacity;
};

/// One row of the packet-simulation status table. Device rows (device 0 = Rx,
/// device 1 = Tx) carry no port; port rows carry buffer fullness.
struct StatusRow {
  std::uint8_t device = 0;
  std::optional<PortId> port;
  std::optional<std::uint32_t> rx_buffer_fullness;
  std::optional<std::uint32_t> tx_buffer_fullness;
  std::optional<std::uint64_t> packets_received;
  std::optional<double> receive_rate_pps;
  std::optional<std::uint64_t> packets_sent;
  std::optional<double> transmit_rate_pps;
};

struct StatusSnapshot {
  SimTime at;
  std::vector<StatusRow> rows;
};

inline constexpr SimTime kRateWindow = SimTime::from_ms(1);

/// Status table at `now`; rates are packets/s over the trailing 1 ms.
StatusSnapshot status_snapshot(const MetricCounters& m, SimTime now,
                               const BufferLevels& levels = {});

/// Rebuilds counters from an event log written with format_event.
MetricCounters replay_event_log(std::istream& in, std::size_t egress_ports = kEgressPorts);

}  // namespace npsim
