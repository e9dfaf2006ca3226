#include "npsim/traffic.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "npsim/errors.hpp"

namespace npsim {

namespace {

std::uint16_t dst_port_for(PacketKind kind) {
  switch (kind) {
    case PacketKind::RTP_UDP:
      return 5004;
    case PacketKind::TCP:
      return 80;
    default:
      return 9000;
  }
}

// Smooth weighted round-robin: interleaves kinds across flow indices in
// proportion to their weights.
std::vector<PacketKind> assign_kinds(const std::vector<KindWeight>& mix, std::uint32_t flows) {
  std::vector<double> current(mix.size(), 0.0);
  double total = 0.0;
  for (const auto& kw : mix) total += kw.weight;
  std::vector<PacketKind> out;
  out.reserve(flows);
  for (std::uint32_t i = 0; i < flows; ++i) {
    std::size_t best = 0;
    for (std::size_t k = 0; k < mix.size(); ++k) {
      current[k] += mix[k].weight;
      if (current[k] > current[best]) best = k;
    }
    current[best] -= total;
    out.push_back(mix[best].kind);
  }
  return out;
}

TrafficConfig validated(TrafficConfig cfg) {
  cfg.validate();
  return cfg;
}

}  // namespace

std::vector<KindWeight> uniform_mix() {
  return {{PacketKind::RTP_UDP, 1.0},
          {PacketKind::UDP_LARGE_TTL, 1.0},
          {PacketKind::UDP_SMALL_TTL, 1.0},
          {PacketKind::TCP, 1.0}};
}

void TrafficConfig::validate() const {
  if (aggregate_rate_bps == 0) throw ConfigError("traffic.rate: must be positive");
  if (flow_count == 0) throw ConfigError("traffic.flows: must be positive");
  if (start_window > duration) {
    throw ConfigError("traffic.start_window: must not exceed duration (" +
                      std::to_string(start_window.ns) + "ns > " + std::to_string(duration.ns) +
                      "ns)");
  }
  if (mix.empty()) throw ConfigError("traffic.mix: at least one kind required");
  std::array<bool, kKindCount> seen{};
  for (const auto& kw : mix) {
    if (!(kw.weight > 0.0)) {
      throw ConfigError("traffic.mix: weight of " + std::string(to_string(kw.kind)) +
                        " must be positive");
    }
    if (seen[static_cast<std::size_t>(kw.kind)]) {
      throw ConfigError("traffic.mix: duplicate kind " + std::string(to_string(kw.kind)));
    }
    seen[static_cast<std::size_t>(kw.kind)] = true;
  }
  std::uint32_t smallest = 0;
  if (const auto* f = std::get_if<FixedSize>(&size_model)) {
    if (f->bytes < kMinPacketBytes || f->bytes > kMaxPacketBytes) {
      throw ConfigError("traffic.size: must be in [20, 9000] bytes");
    }
    smallest = f->bytes;
  } else {
    const auto& u = std::get<UniformSize>(size_model);
    if (u.lo < kMinPacketBytes || u.hi > kMaxPacketBytes || u.lo > u.hi) {
      throw ConfigError("traffic.size: range must satisfy 20 <= lo <= hi <= 9000");
    }
    smallest = u.lo;
  }
  if ((serialization_time(smallest, aggregate_rate_bps) + inter_packet_gap).ns == 0) {
    throw ConfigError("traffic.gap: inter-arrival time would be zero");
  }
  for (const auto& c : capsules) {
    if (c.wire.empty()) throw ConfigError("capsules.capsule: empty directive");
  }
}

FlowKey flow_key_for(std::uint32_t flow_index, PacketKind kind) {
  const std::uint32_t low = flow_index & 0xFFFF;
  return FlowKey{
      .src_addr = (10U << 24) | low,
      .dst_addr = (192U << 24) | (168U << 16) | low,
      .src_port = static_cast<std::uint16_t>(10000 + (flow_index % 50000)),
      .dst_port = dst_port_for(kind),
      .protocol = protocol_of(kind),
  };
}

FlowKey control_flow_key() {
  return FlowKey{
      .src_addr = (10U << 24) | (255U << 16) | (255U << 8) | 254U,
      .dst_addr = (192U << 24) | (168U << 16) | (255U << 8) | 254U,
      .src_port = 7777,
      .dst_port = 7777,
      .protocol = Protocol::UDP,
  };
}

PortId ingress_port_for(const FlowKey& key) {
  return static_cast<PortId>(hash_flow_key(key) & 1U);
}

TrafficGenerator::TrafficGenerator(TrafficConfig cfg)
    : cfg_(validated(std::move(cfg))), rng_(cfg_.seed, RngStream::Traffic) {
  const auto kinds = assign_kinds(cfg_.mix, cfg_.flow_count);
  flows_.reserve(cfg_.flow_count);
  for (std::uint32_t i = 0; i < cfg_.flow_count; ++i) {
    const SimTime start =
        cfg_.start_window.ns == 0 ? SimTime{} : SimTime{rng_.uniform(0, cfg_.start_window.ns - 1)};
    const FlowKey key = flow_key_for(i, kinds[i]);
    flows_.push_back(Flow{key, kinds[i], start, ingress_port_for(key)});
  }
  start_order_.resize(flows_.size());
  std::iota(start_order_.begin(), start_order_.end(), 0U);
  std::stable_sort(start_order_.begin(), start_order_.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return flows_[a].start < flows_[b].start; });
  for (const auto& kw : cfg_.mix) kind_weight_[static_cast<std::size_t>(kw.kind)] = kw.weight;

  std::stable_sort(cfg_.capsules.begin(), cfg_.capsules.end(),
                   [](const ScheduledCapsule& a, const ScheduledCapsule& b) { return a.at < b.at; });
  next_time_ = flows_[start_order_.front()].start;
}

void TrafficGenerator::admit_started_flows(SimTime now) {
  while (started_ < start_order_.size() && flows_[start_order_[started_]].start <= now) {
    const std::uint32_t f = start_order_[started_++];
    started_by_kind_[static_cast<std::size_t>(flows_[f].kind)].push_back(f);
  }
}

std::uint32_t TrafficGenerator::draw_size() {
  if (const auto* f = std::get_if<FixedSize>(&cfg_.size_model)) return f->bytes;
  const auto& u = std::get<UniformSize>(cfg_.size_model);
  return static_cast<std::uint32_t>(rng_.uniform(u.lo, u.hi));
}

std::uint8_t TrafficGenerator::draw_ttl(PacketKind kind) {
  switch (kind) {
    case PacketKind::UDP_LARGE_TTL:
      return static_cast<std::uint8_t>(rng_.uniform(kLargeTtlMin, kLargeTtlMax));
    case PacketKind::UDP_SMALL_TTL:
      return static_cast<std::uint8_t>(rng_.uniform(kSmallTtlMin, kSmallTtlMax));
    default:
      return kDefaultTtl;
  }
}

std::optional<ArrivalEvent> TrafficGenerator::next_arrival() {
  if (exhausted_ || next_time_ >= cfg_.duration) {
    exhausted_ = true;
    return std::nullopt;
  }
  const SimTime now = next_time_;
  admit_started_flows(now);

  Packet p;
  p.id = next_id_++;
  p.t_created = now;

  if (next_capsule_ < cfg_.capsules.size() && cfg_.capsules[next_capsule_].at <= now) {
    p.flow = control_flow_key();
    p.kind = PacketKind::UDP_LARGE_TTL;
    p.size_bytes = kElementBytes;
    p.ttl = kDefaultTtl;
    p.capsule = Capsule{cfg_.capsules[next_capsule_++].wire, {}};
    p.ingress_port = ingress_port_for(p.flow);
  } else {
    double total = 0.0;
    for (std::size_t k = 0; k < kKindCount; ++k) {
      if (!started_by_kind_[k].empty()) total += kind_weight_[k];
    }
    const double pick = rng_.uniform01() * total;
    std::size_t kind = kKindCount;
    double acc = 0.0;
    for (std::size_t k = 0; k < kKindCount; ++k) {
      if (started_by_kind_[k].empty()) continue;
      kind = k;
      acc += kind_weight_[k];
      if (pick < acc) break;
    }
    const auto& pool = started_by_kind_[kind];
    const Flow& flow = flows_[pool[rng_.uniform(0, pool.size() - 1)]];
    p.flow = flow.key;
    p.kind = flow.kind;
    p.size_bytes = draw_size();
    p.ttl = draw_ttl(flow.kind);
    p.ingress_port = flow.ingress;
  }

  next_time_ = now + serialization_time(p.size_bytes, cfg_.aggregate_rate_bps) +
               cfg_.inter_packet_gap;
  const PortId port = p.ingress_port;
  return ArrivalEvent{now, std::move(p), port};
}

}  // namespace npsim
