#include "npsim/classifier.hpp"

#include <algorithm>
#include <string>

#include "npsim/errors.hpp"

namespace npsim {

RoutingPolicy RoutingPolicy::defaults() {
  RoutingPolicy r;
  r.class_to_port[index_of(TrafficClass::PRIV)] = {0};
  r.class_to_port[index_of(TrafficClass::EF)] = {0};
  r.class_to_port[index_of(TrafficClass::AF)] = {1, 2};
  r.class_to_port[index_of(TrafficClass::BE)] = {3, 4};
  return r;
}

std::vector<PortId> RoutingPolicy::low_priority_ports() const {
  std::vector<PortId> high;
  for (auto c : {TrafficClass::EF, TrafficClass::PRIV}) {
    for (PortId p : ports_for(c)) high.push_back(p);
  }
  std::vector<PortId> low;
  for (auto c : {TrafficClass::AF, TrafficClass::BE}) {
    for (PortId p : ports_for(c)) {
      if (std::find(high.begin(), high.end(), p) == high.end() &&
          std::find(low.begin(), low.end(), p) == low.end()) {
        low.push_back(p);
      }
    }
  }
  std::sort(low.begin(), low.end());
  return low;
}

void RoutingPolicy::validate(std::size_t port_count) const {
  for (auto c : kAllClasses) {
    const auto& ports = ports_for(c);
    if (ports.empty()) {
      throw ConfigError("classifier.route_" + std::string(to_string(c)) +
                        ": at least one port required");
    }
    for (PortId p : ports) {
      if (p >= port_count) {
        throw ConfigError("classifier.route_" + std::string(to_string(c)) + ": port " +
                          std::to_string(p) + " outside 0.." + std::to_string(port_count - 1));
      }
    }
  }
}

FlowTable::FlowTable(std::size_t max_entries) : max_entries_(max_entries) {
  if (max_entries == 0) throw ConfigError("classifier.table_max: must be positive");
}

FlowTableEntry* FlowTable::find(const FlowKey& key) {
  auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second;
}

const FlowTableEntry* FlowTable::find(const FlowKey& key) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second;
}

FlowTableEntry& FlowTable::insert(const FlowTableEntry& entry) {
  if (auto* existing = find(entry.key)) {
    *existing = entry;
    return *existing;
  }
  if (entries_.size() >= max_entries_) {
    auto stalest = entries_.begin();
    for (auto it = entries_.begin(); it != entries_.end(); ++it) {
      const auto& a = it->second;
      const auto& b = stalest->second;
      if (a.last_hit < b.last_hit || (a.last_hit == b.last_hit && a.key < b.key)) stalest = it;
    }
    entries_.erase(stalest);
  }
  return entries_.emplace(entry.key, entry).first->second;
}

std::size_t FlowTable::evict_idle(SimTime now, SimTime max_idle) {
  return std::erase_if(entries_, [&](const auto& kv) { return now - kv.second.last_hit > max_idle; });
}

Classifier::Classifier(ClassifierConfig cfg, std::size_t port_count)
    : cfg_(std::move(cfg)), table_(cfg_.table_max), load_(port_count) {
  cfg_.routing.validate(port_count);
  if (cfg_.refresh_interval.ns == 0) {
    throw ConfigError("classifier.refresh_interval: must be positive");
  }
}

TrafficClass Classifier::default_class(const FlowKey& key) const {
  switch (key.protocol) {
    case Protocol::RTP_UDP:
      return TrafficClass::EF;
    case Protocol::UDP:
      return TrafficClass::AF;
    case Protocol::TCP:
      return TrafficClass::BE;
  }
  return TrafficClass::BE;
}

std::optional<TrafficClass> Classifier::override_for(const FlowKey& key) const {
  auto it = overrides_.find(key);
  if (it == overrides_.end()) return std::nullopt;
  return it->second;
}

PortId Classifier::least_loaded(const std::vector<PortId>& candidates) const {
  PortId best = candidates.front();
  for (PortId p : candidates) {
    const auto occ = load_[p].occupancy;
    if (occ < load_[best].occupancy || (occ == load_[best].occupancy && p < best)) best = p;
  }
  return best;
}

FlowTableEntry Classifier::slow_path(const Packet& pkt, SimTime now) const {
  const TrafficClass cls = override_for(pkt.flow).value_or(default_class(pkt.flow));
  return FlowTableEntry{pkt.flow, cls, least_loaded(cfg_.routing.ports_for(cls)), now, 0};
}

ClassifyResult Classifier::classify(Packet& pkt, SimTime now) {
  if (pkt.ttl <= 1) {
    pkt.ttl = 0;
    pkt.mark_dropped(PacketFate::DroppedTTL);
    ++stats_.ttl_drops;
    return ClassifyResult{.ttl_expired = true};
  }
  --pkt.ttl;

  ClassifyResult r;
  if (pkt.capsule) {
    r.traffic_class = TrafficClass::BE;
    r.egress_port = least_loaded(cfg_.routing.ports_for(TrafficClass::BE));
    ++stats_.slow_path;
  } else if (FlowTableEntry* e = table_.find(pkt.flow)) {
    e->last_hit = now;
    ++e->hits;
    r.traffic_class = e->traffic_class;
    r.egress_port = e->egress_port;
    r.fast_path = true;
    ++stats_.fast_path;
  } else {
    FlowTableEntry& installed = table_.insert(slow_path(pkt, now));
    r.traffic_class = installed.traffic_class;
    r.egress_port = installed.egress_port;
    ++stats_.slow_path;
  }
  pkt.traffic_class = r.traffic_class;
  pkt.egress_port = r.egress_port;
  return r;
}

std::size_t Classifier::refresh_table(SimTime now) {
  const std::size_t n = table_.evict_idle(now, cfg_.refresh_interval);
  stats_.evictions += n;
  return n;
}

CapsuleOutcome Classifier::apply_capsule(Packet& pkt, std::span<EgressQueue> ports, SimTime) {
  if (!pkt.capsule) return CapsuleOutcome::Ignored;
  const auto directive = parse_capsule(pkt.capsule->wire);
  if (!directive) {
    ++stats_.capsules_ignored;
    return CapsuleOutcome::Ignored;
  }
  struct Apply {
    Classifier& self;
    Packet& pkt;
    std::span<EgressQueue> ports;

    bool operator()(const SetFlowPriority& d) const {
      self.overrides_[d.target] = d.level;
      // The next packet of the flow takes the slow path with its new class.
      self.table_.erase(d.target);
      return true;
    }
    bool operator()(const SetPortThreshold& d) const {
      if (d.port >= ports.size()) return false;
      ports[d.port].set_soft_threshold(d.fraction);
      return true;
    }
    bool operator()(const Trace&) const {
      pkt.capsule->trace_log.push_back(self.cfg_.node_id);
      return true;
    }
  };
  if (!std::visit(Apply{*this, pkt, ports}, *directive)) {
    ++stats_.capsules_ignored;
    return CapsuleOutcome::Ignored;
  }
  ++stats_.capsules_applied;
  return CapsuleOutcome::Applied;
}

void Classifier::update_load(PortId port, PortLoad load) {
  load_.at(port) = load;
  ++stats_.load_updates;
}

}  // namespace npsim
