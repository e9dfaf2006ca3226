#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "npsim/capsule.hpp"
#include "npsim/egress_queue.hpp"
#include "npsim/model.hpp"

namespace npsim {

struct FlowTableEntry {
  FlowKey key;
  TrafficClass traffic_class = TrafficClass::BE;
  PortId egress_port = 0;
  SimTime last_hit;
  std::uint64_t hits = 0;
};

/// Candidate egress ports per class.
struct RoutingPolicy {
  std::array<std::vector<PortId>, kClassCount> class_to_port;

  /// PRIV -> {0}, EF -> {0}, AF -> {1, 2}, BE -> {3, 4}.
  static RoutingPolicy defaults();

  const std::vector<PortId>& ports_for(TrafficClass c) const { return class_to_port[index_of(c)]; }

  /// Ports that serve only AF/BE, i.e. those a full high-priority port may spill into.
  std::vector<PortId> low_priority_ports() const;

  void validate(std::size_t port_count) const;
  bool operator==(const RoutingPolicy&) const = default;
};

/// Fast-path cache of per-flow decisions. Bounded: inserting into a full
/// table evicts the entry with the oldest last_hit (ties by smallest key).
class FlowTable {
 public:
  explicit FlowTable(std::size_t max_entries = 65'536);

  FlowTableEntry* find(const FlowKey& key);
  const FlowTableEntry* find(const FlowKey& key) const;
  FlowTableEntry& insert(const FlowTableEntry& entry);
  bool erase(const FlowKey& key) { return entries_.erase(key) > 0; }

  /// Evicts entries whose last hit is more than `max_idle` before `now`.
  std::size_t evict_idle(SimTime now, SimTime max_idle);

  std::size_t size() const { return entries_.size(); }
  std::size_t max_entries() const { return max_entries_; }

 private:
  std::unordered_map<FlowKey, FlowTableEntry, FlowKeyHash> entries_;
  std::size_t max_entries_;
};

/// Per-port load as last reported by the transmit stage.
struct PortLoad {
  std::uint64_t tx_count = 0;
  std::uint32_t occupancy = 0;
};

struct ClassifierConfig {
  SimTime refresh_interval = SimTime::from_ms(50);
  std::uint32_t table_max = 65'536;
  std::uint32_t node_id = 1;
  RoutingPolicy routing = RoutingPolicy::defaults();

  bool operator==(const ClassifierConfig&) const = default;
};

struct ClassifyResult {
  bool ttl_expired = false;
  TrafficClass traffic_class = TrafficClass::BE;
  PortId egress_port = 0;
  bool fast_path = false;
};

enum class CapsuleOutcome : std::uint8_t { Applied, Ignored };

struct ClassifierStats {
  std::uint64_t fast_path = 0;
  std::uint64_t slow_path = 0;
  std::uint64_t ttl_drops = 0;
  std::uint64_t evictions = 0;
  std::uint64_t capsules_applied = 0;
  std::uint64_t capsules_ignored = 0;
  std::uint64_t load_updates = 0;
};

/// Assigns (class, egress port) per packet. Known flows hit the table; a miss
/// computes the class from capsule overrides or the protocol, and picks the
/// least-loaded candidate port from the transmit feedback view.
class Classifier {
 public:
  explicit Classifier(ClassifierConfig cfg = {}, std::size_t port_count = kEgressPorts);

  /// Decrements TTL; on expiry marks the packet DroppedTTL. Otherwise sets
  /// the packet's class and egress port. Capsule-bearing packets are
  /// classified BE and never cached.
  ClassifyResult classify(Packet& pkt, SimTime now);

  /// Per-packet decision for a table miss. Does not install the entry.
  FlowTableEntry slow_path(const Packet& pkt, SimTime now) const;

  std::size_t refresh_table(SimTime now);

  /// Executes the capsule carried by `pkt` against this node.
  CapsuleOutcome apply_capsule(Packet& pkt, std::span<EgressQueue> ports, SimTime now);

  void update_load(PortId port, PortLoad load);
  const PortLoad& load(PortId port) const { return load_.at(port); }

  TrafficClass default_class(const FlowKey& key) const;
  std::optional<TrafficClass> override_for(const FlowKey& key) const;

  const FlowTable& table() const { return table_; }
  const ClassifierConfig& config() const { return cfg_; }
  const ClassifierStats& stats() const { return stats_; }

 private:
  PortId least_loaded(const std::vector<PortId>& candidates) const;

  ClassifierConfig cfg_;
  FlowTable table_;
  std::vector<PortLoad> load_;
  std::unordered_map<FlowKey, TrafficClass, FlowKeyHash> overrides_;
  ClassifierStats stats_;
};

}  // namespace npsim
