#include "npsim/simulation.hpp"

#include <ostream>
#include <string>

#include "npsim/errors.hpp"

namespace npsim {

namespace {

std::vector<EgressQueue> make_queues(const PortConfig& p) {
  std::vector<EgressQueue> out;
  out.reserve(p.count);
  for (std::uint32_t i = 0; i < p.count; ++i) {
    out.emplace_back(static_cast<PortId>(i), p.capacity_elements(), p.soft_threshold,
                     p.deferred_capacity);
  }
  return out;
}

std::vector<PortLink> make_links(const PortConfig& p) {
  std::vector<PortLink> out;
  out.reserve(p.count);
  for (std::uint32_t i = 0; i < p.count; ++i) out.emplace_back(static_cast<PortId>(i), p.rate_bps[i]);
  return out;
}

const SimulationConfig& validated(const SimulationConfig& cfg) {
  validate_config(cfg);
  return cfg;
}

}  // namespace

void validate_config(const SimulationConfig& cfg) {
  cfg.traffic.validate();
  cfg.pipeline.validate();
  cfg.ports.validate();
  cfg.classifier.routing.validate(cfg.ports.count);
  if (cfg.classifier.refresh_interval.ns == 0) {
    throw ConfigError("classifier.refresh_interval: must be positive");
  }
  if (cfg.classifier.table_max == 0) throw ConfigError("classifier.table_max: must be positive");
  // Also checks the resolved thresholds against the buffer size.
  (void)RedState::from_params(cfg.red, cfg.ports.capacity_elements());
  if (cfg.snapshot_interval && cfg.snapshot_interval->ns == 0) {
    throw ConfigError("snapshot_interval: must be positive");
  }
}

void PipelineConfig::validate() const {
  if (rbuf_bytes < kElementBytes) throw ConfigError("pipeline.rbuf_bytes: must be at least 64");
  if (ring_capacity == 0) throw ConfigError("pipeline.ring_capacity: must be positive");
}

void PortConfig::validate() const {
  if (count == 0 || count > kEgressPorts) throw ConfigError("ports.count: must be in 1..5");
  if (rate_bps.size() != count) {
    throw ConfigError("ports.rate: expected " + std::to_string(count) + " rates, got " +
                      std::to_string(rate_bps.size()));
  }
  for (auto r : rate_bps) {
    if (r == 0) throw ConfigError("ports.rate: must be positive");
  }
  if (tbuf_bytes < kElementBytes) throw ConfigError("ports.tbuf_bytes: must be at least 64");
  if (!(soft_threshold > 0.0 && soft_threshold <= 1.0)) {
    throw ConfigError("ports.soft_threshold: must be in (0, 1]");
  }
  if (feedback_every == 0) throw ConfigError("ports.feedback_every: must be positive");
}

std::unique_ptr<AqmPolicy> make_policy(const SimulationConfig& cfg,
                                       std::span<const EgressQueue> queues) {
  switch (cfg.policy) {
    case PolicyKind::DropTail:
      return std::make_unique<DropTailPolicy>();
    case PolicyKind::Red:
      return std::make_unique<RedPolicy>(cfg.red, queues, cfg.ports.rate_bps, cfg.traffic.seed);
    case PolicyKind::AnAqm:
      return std::make_unique<AnAqmPolicy>(
          AnAqmConfig{cfg.classifier.routing.low_priority_ports()});
  }
  throw ConfigError("policy: unknown kind");
}

Simulation::Simulation(SimulationConfig cfg)
    : cfg_(validated(cfg)),
      generator_(cfg_.traffic),
      rx_(cfg_.pipeline.rbuf_bytes / kElementBytes),
      ring_(cfg_.pipeline.ring_capacity),
      classifier_(cfg_.classifier, cfg_.ports.count),
      queues_(make_queues(cfg_.ports)),
      links_(make_links(cfg_.ports)),
      policy_(make_policy(cfg_, queues_)),
      metrics_(cfg_.ports.count) {
  metrics_.metadata.seed = cfg_.traffic.seed;
  metrics_.metadata.policy = std::string(to_string(cfg_.policy));
  metrics_.metadata.duration = cfg_.traffic.duration;
}

Simulation::~Simulation() = default;

void Simulation::prime() {
  primed_ = true;
  schedule_next_arrival();
  events_.schedule(cfg_.classifier.refresh_interval, Event{EventType::Refresh});
  if (cfg_.snapshot_interval) events_.schedule(*cfg_.snapshot_interval, Event{EventType::Snapshot});
}

const MetricCounters& Simulation::run(std::optional<SimTime> until) {
  if (!primed_) prime();
  const SimTime stop = until.value_or(cfg_.traffic.duration);
  while (!events_.empty() && events_.next_time() <= stop) {
    const auto entry = events_.pop();
    ++stats_.events_processed;
    handle(entry.payload, entry.at);
  }
  audit_conservation();
  metrics_.metadata.arrival_hash = arrival_hash_;
  return metrics_;
}

void Simulation::handle(const Event& e, SimTime now) {
  switch (e.type) {
    case EventType::Arrival:
      on_arrival(now);
      break;
    case EventType::RxDone:
      rx_.complete(e.arg);
      pump_ingress(now);
      break;
    case EventType::ClassifyDone:
      on_classified(now);
      break;
    case EventType::TxDone:
      on_tx_done(e.arg, now);
      break;
    case EventType::Refresh:
      classifier_.refresh_table(now);
      events_.schedule(now + cfg_.classifier.refresh_interval, Event{EventType::Refresh});
      break;
    case EventType::Snapshot:
      snapshots_.push_back(status_snapshot(metrics_, now, buffer_levels()));
      audit_conservation();
      events_.schedule(now + *cfg_.snapshot_interval, Event{EventType::Snapshot});
      break;
  }
}

void Simulation::schedule_next_arrival() {
  pending_arrival_ = generator_.next_arrival();
  if (pending_arrival_) events_.schedule(pending_arrival_->at, Event{EventType::Arrival});
}

void Simulation::hash_arrival(const ArrivalEvent& a) {
  const auto mix = [&](std::uint64_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) {
      arrival_hash_ ^= (v >> (8 * i)) & 0xFF;
      arrival_hash_ *= 0x100000001b3ULL;
    }
  };
  const Packet& p = a.packet;
  mix(a.at.ns, 8);
  mix(p.id, 8);
  mix(p.flow.src_addr, 4);
  mix(p.flow.dst_addr, 4);
  mix(p.flow.src_port, 2);
  mix(p.flow.dst_port, 2);
  mix(static_cast<std::uint64_t>(p.flow.protocol), 1);
  mix(p.size_bytes, 4);
  mix(p.ttl, 1);
  mix(a.ingress_port, 1);
}

void Simulation::on_arrival(SimTime now) {
  ArrivalEvent a = std::move(*pending_arrival_);
  pending_arrival_.reset();
  hash_arrival(a);
  Packet& p = a.packet;
  emit(LifecycleEvent{now, p.id, EventKind::Arrive, std::nullopt, a.ingress_port, p.size_bytes},
       p.flow);

  const SimTime service{cfg_.pipeline.rx_service_per_mpacket.ns * p.elements()};
  if (!rx_.admit(p, service)) {
    ++stats_.rbuf_drops;
    p.mark_dropped(PacketFate::DroppedQueueFull);
    emit(LifecycleEvent{now, p.id, EventKind::DropQueueFull, std::nullopt, std::nullopt,
                        p.size_bytes},
         p.flow);
  }
  pump_ingress(now);
  schedule_next_arrival();
}

void Simulation::pump_ingress(SimTime now) {
  const auto into_ring = [&](Packet&& p) {
    if (ring_.put(std::move(p)) == RingPut::Accepted) return true;
    ++stats_.ring_blocked;
    return false;
  };
  for (;;) {
    bool progress = rx_.commit(into_ring) > 0;
    if (!classifying_ && !ring_.empty()) {
      classifying_ = ring_.get();
      events_.schedule(now + cfg_.pipeline.classify_service, Event{EventType::ClassifyDone});
      progress = true;
    }
    if (!progress) break;
  }
  for (const auto& d : rx_.dispatch(now)) {
    events_.schedule(d.done_at, Event{EventType::RxDone, d.context});
  }
}

void Simulation::on_classified(SimTime now) {
  Packet pkt = std::move(*classifying_);
  classifying_.reset();

  const FlowKey flow = pkt.flow;
  const PacketId id = pkt.id;
  const std::uint32_t bytes = pkt.size_bytes;

  const ClassifyResult r = classifier_.classify(pkt, now);
  if (r.ttl_expired) {
    emit(LifecycleEvent{now, id, EventKind::DropTtl, std::nullopt, std::nullopt, bytes}, flow);
    pump_ingress(now);
    return;
  }
  if (pkt.capsule) classifier_.apply_capsule(pkt, queues_, now);

  const TrafficClass cls = r.traffic_class;
  const PortId target = r.egress_port;
  const EnqueueVerdict v = policy_->enqueue(queues_, pkt, target, now);

  struct Apply {
    Simulation& sim;
    SimTime now;
    PacketId id;
    TrafficClass cls;
    PortId target;
    std::uint32_t bytes;
    const FlowKey& flow;

    void operator()(const verdict::Accept& a) const {
      sim.emit(LifecycleEvent{now, id, EventKind::Enqueue, cls, a.port, bytes}, flow);
      sim.try_start_tx(a.port, now);
    }
    void operator()(const verdict::Redirect& r) const {
      sim.emit(LifecycleEvent{now, id, EventKind::Redirect, cls, r.to_port, bytes}, flow);
      sim.try_start_tx(r.to_port, now);
    }
    void operator()(const verdict::Defer& d) const {
      sim.emit(LifecycleEvent{now, id, EventKind::Defer, cls, d.port, bytes}, flow);
    }
    void operator()(const verdict::Drop& d) const {
      EventKind kind = EventKind::DropQueueFull;
      if (d.reason == DropReason::DeferredFull) kind = EventKind::DropDeferredFull;
      if (d.reason == DropReason::Red) kind = EventKind::DropRed;
      sim.emit(LifecycleEvent{now, id, kind, cls, target, bytes}, flow);
    }
  };
  std::visit(Apply{*this, now, id, cls, target, bytes, flow}, v);
  pump_ingress(now);
}

void Simulation::try_start_tx(PortId port, SimTime now) {
  PortLink& link = links_[port];
  EgressQueue& q = queues_[port];
  if (!link.idle(now) || q.queued() == 0) return;
  auto pkt = select_next(q);
  ++stats_.selections;
  if (selection_observer_) selection_observer_(port, *pkt, q);
  const SimTime done = link.transmit(std::move(*pkt), now);
  events_.schedule(done, Event{EventType::TxDone, port});
}

void Simulation::on_tx_done(PortId port, SimTime now) {
  PortLink& link = links_[port];
  EgressQueue& q = queues_[port];
  Packet p = link.complete(now);
  q.release(p.elements());
  emit(LifecycleEvent{now, p.id, EventKind::Transmit, p.traffic_class, port, p.size_bytes},
       p.flow);
  if (publish_tx_feedback(link, q.occupancy(), classifier_, cfg_.ports.feedback_every)) {
    ++stats_.feedback_events;
  }
  stats_.promotions += drain_deferred(q, [&](const Packet& promoted) {
    emit(LifecycleEvent{now, promoted.id, EventKind::Promote, promoted.traffic_class, port,
                        promoted.size_bytes},
         promoted.flow);
  });
  policy_->on_departure(queues_, port, now);
  try_start_tx(port, now);
}

void Simulation::emit(const LifecycleEvent& e, const FlowKey& flow) {
  metrics_.record(e);
  if (log_) *log_ << format_event(e) << '\n';
  if (sink_) sink_(e, flow);
}

std::uint64_t Simulation::resident() const {
  std::uint64_t n = rx_.resident() + ring_.occupancy() + (classifying_ ? 1 : 0);
  for (std::size_t i = 0; i < queues_.size(); ++i) {
    n += queues_[i].queued() + queues_[i].deferred_size();
    n += links_[i].in_service() ? 1 : 0;
  }
  return n;
}

BufferLevels Simulation::buffer_levels() const {
  BufferLevels b;
  for (PortId p = 0; p < kIngressPorts; ++p) b.rx_elements[p] = rx_.rbuf_used_by_port(p);
  b.rx_capacity = rx_.rbuf_capacity();
  for (const auto& q : queues_) {
    b.tx_elements.push_back(q.occupancy());
    b.tx_capacity.push_back(q.capacity());
  }
  return b;
}

void Simulation::audit_conservation() const {
  const std::uint64_t held = resident();
  const std::uint64_t accounted = metrics_.transmitted() + metrics_.dropped() + held;
  if (metrics_.generated() != accounted || metrics_.resident() != held) {
    throw AuditError("conservation violated at " + std::to_string(now().ns) +
                     "ns: generated=" + std::to_string(metrics_.generated()) +
                     " transmitted=" + std::to_string(metrics_.transmitted()) +
                     " dropped=" + std::to_string(metrics_.dropped()) +
                     " resident=" + std::to_string(held) +
                     " (metrics resident=" + std::to_string(metrics_.resident()) + ")");
  }
}

}  // namespace npsim
