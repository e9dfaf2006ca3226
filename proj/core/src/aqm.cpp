#include "npsim/aqm.hpp"

#include <cmath>
#include <string>

#include "npsim/errors.hpp"

namespace npsim {

PacketFate fate_for(DropReason r) {
  switch (r) {
    case DropReason::QueueFull:
      return PacketFate::DroppedQueueFull;
    case DropReason::DeferredFull:
      return PacketFate::DroppedDeferredFull;
    case DropReason::Red:
      return PacketFate::DroppedRed;
  }
  return PacketFate::DroppedQueueFull;
}

namespace {

EnqueueVerdict drop(Packet& pkt, DropReason reason) {
  pkt.mark_dropped(fate_for(reason));
  return verdict::Drop{reason};
}

}  // namespace

EnqueueVerdict droptail_enqueue(EgressQueue& q, Packet& pkt, SimTime now) {
  if (!q.fits(pkt.elements())) return drop(pkt, DropReason::QueueFull);
  pkt.mark_enqueued(now);
  q.admit(std::move(pkt));
  return verdict::Accept{q.port()};
}

void RedParams::validate() const {
  if (!(w_q > 0.0 && w_q <= 1.0)) throw ConfigError("red.w_q: must be in (0, 1]");
  if (!(max_p > 0.0 && max_p <= 1.0)) throw ConfigError("red.max_p: must be in (0, 1]");
  if (min_th && !(*min_th >= 0.0)) throw ConfigError("red.min_th: must be non-negative");
  if (min_th && max_th && !(*min_th < *max_th)) {
    throw ConfigError("red.min_th: must be below red.max_th");
  }
}

RedState RedState::from_params(const RedParams& p, std::uint32_t capacity_elems) {
  p.validate();
  RedState s;
  s.w_q = p.w_q;
  s.max_p = p.max_p;
  s.min_th = p.min_th.value_or(0.25 * capacity_elems);
  s.max_th = p.max_th.value_or(0.75 * capacity_elems);
  if (!(s.min_th < s.max_th)) throw ConfigError("red.min_th: must be below red.max_th");
  if (s.max_th > capacity_elems) {
    throw ConfigError("red.max_th: must not exceed queue capacity (" +
                      std::to_string(capacity_elems) + " elements)");
  }
  return s;
}

double red_update_avg(RedState& s, std::uint32_t occupancy, SimTime now, SimTime typical_tx) {
  if (occupancy > 0) {
    s.avg = (1.0 - s.w_q) * s.avg + s.w_q * static_cast<double>(occupancy);
    return s.avg;
  }
  if (s.idle_since && typical_tx.ns > 0) {
    const std::uint64_t m = (now - *s.idle_since).ns / typical_tx.ns;
    s.avg *= std::pow(1.0 - s.w_q, static_cast<double>(m));
  }
  s.idle_since = now;
  return s.avg;
}

RedDecision red_decide(RedState& s, Rng& rng) {
  if (s.avg < s.min_th) {
    s.count = -1;
    return RedDecision::Accept;
  }
  if (s.avg >= s.max_th) {
    s.count = 0;
    return RedDecision::ForcedDrop;
  }
  ++s.count;
  const double p_b = s.max_p * (s.avg - s.min_th) / (s.max_th - s.min_th);
  const double denom = 1.0 - static_cast<double>(s.count) * p_b;
  const double p_a = denom <= 0.0 ? 1.0 : std::min(1.0, p_b / denom);
  if (rng.uniform01() < p_a) {
    s.count = 0;
    return RedDecision::EarlyDrop;
  }
  return RedDecision::Accept;
}

EnqueueVerdict red_enqueue(RedState& s, EgressQueue& q, Packet& pkt, Rng& rng, SimTime now) {
  if (red_decide(s, rng) != RedDecision::Accept) return drop(pkt, DropReason::Red);
  if (!q.fits(pkt.elements())) return drop(pkt, DropReason::QueueFull);
  pkt.mark_enqueued(now);
  q.admit(std::move(pkt));
  s.idle_since.reset();
  return verdict::Accept{q.port()};
}

EnqueueVerdict anaqm_enqueue(std::span<EgressQueue> ports, Packet& pkt, PortId target,
                             SimTime now, const AnAqmConfig& cfg) {
  if (target >= ports.size()) {
    throw SimulationError("target port " + std::to_string(target) + " out of range");
  }
  if (!pkt.traffic_class) {
    throw SimulationError("packet " + std::to_string(pkt.id) + ": enqueue before classification");
  }
  EgressQueue& home = ports[target];
  const std::uint32_t elems = pkt.elements();

  if (is_high_priority(*pkt.traffic_class)) {
    // Soft threshold is only a watermark here: admit up to full capacity.
    if (home.fits(elems)) {
      pkt.mark_enqueued(now);
      home.admit(std::move(pkt));
      return verdict::Accept{target};
    }
    EgressQueue* best = nullptr;
    for (PortId p : cfg.low_priority_ports) {
      if (p == target || p >= ports.size()) continue;
      EgressQueue& q = ports[p];
      if (!q.fits(elems)) continue;
      if (best == nullptr || q.occupancy() < best->occupancy() ||
          (q.occupancy() == best->occupancy() && q.port() < best->port())) {
        best = &q;
      }
    }
    if (best == nullptr) return drop(pkt, DropReason::QueueFull);
    pkt.redirected = true;
    pkt.mark_enqueued(now);
    const PortId to = best->port();
    best->admit(std::move(pkt));
    return verdict::Redirect{target, to};
  }

  if (home.admitting() && home.occupancy() < home.soft_threshold() && home.fits(elems)) {
    pkt.mark_enqueued(now);
    home.admit(std::move(pkt));
    return verdict::Accept{target};
  }
  home.stop_admitting();
  if (home.deferred_full()) return drop(pkt, DropReason::DeferredFull);
  pkt.mark_enqueued(now);
  home.defer(std::move(pkt));
  return verdict::Defer{target};
}

std::size_t drain_deferred(EgressQueue& q, const std::function<void(const Packet&)>& on_promote) {
  std::size_t promoted = 0;
  while (q.deferred_size() > 0 && q.occupancy() < q.soft_threshold() &&
         q.fits(q.deferred_front().elements())) {
    Packet p = q.take_deferred();
    if (on_promote) on_promote(p);
    q.admit(std::move(p));
    ++promoted;
  }
  if (q.deferred_size() == 0 && q.occupancy() < q.soft_threshold()) q.resume_admitting();
  return promoted;
}

std::string_view to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::DropTail:
      return "droptail";
    case PolicyKind::Red:
      return "red";
    case PolicyKind::AnAqm:
      return "anaqm";
  }
  return "?";
}

std::optional<PolicyKind> parse_policy_kind(std::string_view s) {
  for (auto k : {PolicyKind::DropTail, PolicyKind::Red, PolicyKind::AnAqm}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

EnqueueVerdict DropTailPolicy::enqueue(std::span<EgressQueue> ports, Packet& pkt, PortId target,
                                       SimTime now) {
  return droptail_enqueue(ports[target], pkt, now);
}

RedPolicy::RedPolicy(const RedParams& params, std::span<const EgressQueue> ports,
                     std::span<const std::uint64_t> port_rates_bps, std::uint64_t seed)
    : rng_(seed, RngStream::Red) {
  if (port_rates_bps.size() != ports.size()) {
    throw ConfigError("ports.rate: one rate per port required");
  }
  for (std::size_t i = 0; i < ports.size(); ++i) {
    states_.push_back(RedState::from_params(params, ports[i].capacity()));
    typical_tx_.push_back(serialization_time(kElementBytes, port_rates_bps[i]));
  }
}

EnqueueVerdict RedPolicy::enqueue(std::span<EgressQueue> ports, Packet& pkt, PortId target,
                                  SimTime now) {
  RedState& s = states_.at(target);
  red_update_avg(s, ports[target].occupancy(), now, typical_tx_[target]);
  return red_enqueue(s, ports[target], pkt, rng_, now);
}

void RedPolicy::on_departure(std::span<EgressQueue> ports, PortId port, SimTime now) {
  if (ports[port].occupancy() == 0) states_.at(port).idle_since = now;
}

EnqueueVerdict AnAqmPolicy::enqueue(std::span<EgressQueue> ports, Packet& pkt, PortId target,
                                    SimTime now) {
  return anaqm_enqueue(ports, pkt, target, now, cfg_);
}

}  // namespace npsim
