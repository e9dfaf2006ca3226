#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "npsim/aqm.hpp"
#include "npsim/classifier.hpp"
#include "npsim/egress_queue.hpp"
#include "npsim/event_queue.hpp"
#include "npsim/metrics.hpp"
#include "npsim/receive_stage.hpp"
#include "npsim/ring_buffer.hpp"
#include "npsim/scheduler.hpp"
#include "npsim/traffic.hpp"

namespace npsim {

struct PipelineConfig {
  SimTime rx_service_per_mpacket = SimTime::from_ns(50);
  std::uint32_t rbuf_bytes = kBufferBytes;
  std::uint32_t ring_capacity = 128;
  SimTime classify_service = SimTime::from_ns(50);

  void validate() const;
  bool operator==(const PipelineConfig&) const = default;
};

struct PortConfig {
  std::uint32_t count = kEgressPorts;
  std::vector<std::uint64_t> rate_bps = std::vector<std::uint64_t>(kEgressPorts, kDefaultPortRateBps);
  std::uint32_t tbuf_bytes = kBufferBytes;
  double soft_threshold = kDefaultSoftThreshold;
  std::uint32_t deferred_capacity = kDefaultDeferredCapacity;
  std::uint32_t feedback_every = kDefaultFeedbackEvery;

  std::uint32_t capacity_elements() const { return tbuf_bytes / kElementBytes; }
  void validate() const;
  bool operator==(const PortConfig&) const = default;
};

struct SimulationConfig {
  TrafficConfig traffic;
  PipelineConfig pipeline;
  PortConfig ports;
  ClassifierConfig classifier;
  PolicyKind policy = PolicyKind::AnAqm;
  RedParams red;
  /// Period of status snapshots; each one also audits packet conservation.
  std::optional<SimTime> snapshot_interval;
};

/// Validates every section; throws ConfigError naming the offending key.
void validate_config(const SimulationConfig& cfg);

struct PipelineStats {
  std::uint64_t events_processed = 0;
  std::uint64_t rbuf_drops = 0;
  std::uint64_t ring_blocked = 0;
  std::uint64_t selections = 0;
  std::uint64_t feedback_events = 0;
  std::uint64_t promotions = 0;
};

std::unique_ptr<AqmPolicy> make_policy(const SimulationConfig& cfg,
                                       std::span<const EgressQueue> queues);

/// The discrete-event model of the forwarding pipeline:
///
///   generator -> RBUF/receive contexts -> scratch ring -> classifier
///             -> AQM policy -> egress queues -> per-port links
///
/// One event loop owns all state; runs are deterministic for a fixed
/// configuration and share no mutable globals.
class Simulation {
 public:
  /// Observes each lifecycle event together with the packet's flow.
  using EventSink = std::function<void(const LifecycleEvent&, const FlowKey&)>;
  /// Observes each scheduling decision: the chosen packet and the queue it
  /// left behind.
  using SelectionObserver =
      std::function<void(PortId, const Packet& selected, const EgressQueue& remaining)>;

  explicit Simulation(SimulationConfig cfg);
  ~Simulation();
  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  /// Processes events in (time, sequence) order up to and including
  /// `until` (default: the traffic duration), then audits conservation.
  const MetricCounters& run(std::optional<SimTime> until = std::nullopt);

  void set_event_sink(EventSink sink) { sink_ = std::move(sink); }
  void set_selection_observer(SelectionObserver obs) { selection_observer_ = std::move(obs); }
  void set_event_log(std::ostream* log) { log_ = log; }

  const SimulationConfig& config() const { return cfg_; }
  const MetricCounters& metrics() const { return metrics_; }
  MetricCounters& metrics() { return metrics_; }
  std::span<const EgressQueue> queues() const { return queues_; }
  std::span<const PortLink> links() const { return links_; }
  const Classifier& classifier() const { return classifier_; }
  const ReceiveStage& receive_stage() const { return rx_; }
  const AqmPolicy& policy() const { return *policy_; }
  const PipelineStats& stats() const { return stats_; }
  const std::vector<StatusSnapshot>& snapshots() const { return snapshots_; }
  SimTime now() const { return events_.now(); }

  /// Packets currently held by any stage, counted from the stages themselves.
  std::uint64_t resident() const;
  /// FNV-1a over the arrival stream; independent of the policy under test.
  std::uint64_t arrival_hash() const { return arrival_hash_; }
  BufferLevels buffer_levels() const;

  /// Throws AuditError unless generated = transmitted + dropped + resident.
  void audit_conservation() const;

 private:
  enum class EventType : std::uint8_t { Arrival, RxDone, ClassifyDone, TxDone, Refresh, Snapshot };
  struct Event {
    EventType type;
    std::uint8_t arg = 0;
  };

  void prime();
  void handle(const Event& e, SimTime now);
  void on_arrival(SimTime now);
  void on_classified(SimTime now);
  void on_tx_done(PortId port, SimTime now);
  void pump_ingress(SimTime now);
  void try_start_tx(PortId port, SimTime now);
  void schedule_next_arrival();
  void emit(const LifecycleEvent& e, const FlowKey& flow);
  void hash_arrival(const ArrivalEvent& a);

  SimulationConfig cfg_;
  TrafficGenerator generator_;
  ReceiveStage rx_;
  RingBuffer<Packet> ring_;
  Classifier classifier_;
  std::vector<EgressQueue> queues_;
  std::vector<PortLink> links_;
  std::unique_ptr<AqmPolicy> policy_;
  EventQueue<Event> events_;
  MetricCounters metrics_;
  PipelineStats stats_;

  std::optional<ArrivalEvent> pending_arrival_;
  std::optional<Packet> classifying_;
  std::vector<StatusSnapshot> snapshots_;
  std::uint64_t arrival_hash_ = 0xcbf29ce484222325ULL;
  bool primed_ = false;

  EventSink sink_;
  SelectionObserver selection_observer_;
  std::ostream* log_ = nullptr;
};

}  // namespace npsim
