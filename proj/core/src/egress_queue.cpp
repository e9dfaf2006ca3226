#include "npsim/egress_queue.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "npsim/errors.hpp"

namespace npsim {

std::uint32_t threshold_elements(double fraction, std::uint32_t capacity_elems) {
  return static_cast<std::uint32_t>(std::floor(fraction * static_cast<double>(capacity_elems)));
}

EgressQueue::EgressQueue(PortId port, std::uint32_t capacity_elems, double soft_threshold,
                         std::uint32_t deferred_capacity)
    : port_(port),
      capacity_(capacity_elems),
      soft_threshold_(0),
      deferred_capacity_(deferred_capacity) {
  if (capacity_elems == 0) throw ConfigError("ports.tbuf: capacity must be positive");
  set_soft_threshold(soft_threshold);
}

void EgressQueue::set_soft_threshold(double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw ConfigError("ports.soft_threshold: must be in (0, 1]");
  }
  soft_threshold_ = threshold_elements(fraction, capacity_);
}

void EgressQueue::admit(Packet&& pkt) {
  const std::uint32_t elems = pkt.elements();
  if (!fits(elems)) {
    throw SimulationError("port " + std::to_string(port_) + ": admit beyond capacity (" +
                          std::to_string(occupancy_) + "+" + std::to_string(elems) + " > " +
                          std::to_string(capacity_) + ")");
  }
  if (!pkt.traffic_class || !pkt.t_enqueued) {
    throw SimulationError("packet " + std::to_string(pkt.id) + ": admitted unclassified");
  }
  auto& fifo = by_class_[index_of(*pkt.traffic_class)];
  const auto key = [](const Packet& p) { return std::pair{*p.t_enqueued, p.id}; };
  const auto pos = std::upper_bound(fifo.begin(), fifo.end(), pkt,
                                    [&](const Packet& a, const Packet& b) { return key(a) < key(b); });
  occupancy_ += elems;
  pkt.egress_port = port_;
  fifo.insert(pos, std::move(pkt));
}

std::optional<Packet> EgressQueue::pop_next() {
  for (std::size_t c = kClassCount; c-- > 0;) {
    auto& fifo = by_class_[c];
    if (!fifo.empty()) {
      Packet p = std::move(fifo.front());
      fifo.pop_front();
      return p;
    }
  }
  return std::nullopt;
}

void EgressQueue::release(std::uint32_t elems) {
  if (elems > occupancy_) {
    throw SimulationError("port " + std::to_string(port_) + ": release below zero occupancy");
  }
  occupancy_ -= elems;
}

std::size_t EgressQueue::queued() const {
  std::size_t n = 0;
  for (const auto& fifo : by_class_) n += fifo.size();
  return n;
}

std::optional<TrafficClass> EgressQueue::highest_queued() const {
  for (std::size_t c = kClassCount; c-- > 0;) {
    if (!by_class_[c].empty()) return static_cast<TrafficClass>(c);
  }
  return std::nullopt;
}

void EgressQueue::for_each_queued(const std::function<void(const Packet&)>& fn) const {
  for (const auto& fifo : by_class_) {
    for (const auto& p : fifo) fn(p);
  }
}

void EgressQueue::defer(Packet&& pkt) {
  if (deferred_full()) {
    throw SimulationError("port " + std::to_string(port_) + ": deferred queue overflow");
  }
  pkt.egress_port = port_;
  deferred_.push_back(std::move(pkt));
}

Packet EgressQueue::take_deferred() {
  Packet p = std::move(deferred_.front());
  deferred_.pop_front();
  return p;
}

}  // namespace npsim
