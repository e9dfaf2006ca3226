#include "npsim/receive_stage.hpp"

#include "npsim/errors.hpp"
#include "npsim/event_queue.hpp"

namespace npsim {

ReceiveStage::ReceiveStage(std::uint32_t rbuf_elements) : rbuf_capacity_(rbuf_elements) {
  for (std::size_t i = 0; i < kReceiveContexts; ++i) {
    contexts_[i].index = static_cast<std::uint8_t>(i);
  }
}

bool ReceiveStage::admit(Packet& pkt, SimTime service_time) {
  const std::uint32_t elems = pkt.elements();
  if (rbuf_used_ + elems > rbuf_capacity_) return false;
  rbuf_used_ += elems;
  rbuf_by_port_[pkt.ingress_port % kIngressPorts] += elems;
  auto segments = segment_packet(pkt);
  waiting_.push_back(Held{std::move(pkt), service_time, std::move(segments)});
  return true;
}

std::vector<ReceiveStage::Dispatch> ReceiveStage::dispatch(SimTime now) {
  std::vector<Dispatch> out;
  while (!waiting_.empty() && !slots_[next_dispatch_].held) {
    Slot& slot = slots_[next_dispatch_];
    ThreadContext& ctx = contexts_[next_dispatch_];
    slot.held = std::move(waiting_.front());
    waiting_.pop_front();
    slot.done = false;
    ctx.busy_until = now + slot.held->service;
    ctx.holding = slot.held->packet.id;
    out.push_back(Dispatch{next_dispatch_, ctx.busy_until});
    next_dispatch_ = static_cast<std::uint8_t>((next_dispatch_ + 1) % kReceiveContexts);
  }
  return out;
}

void ReceiveStage::complete(std::uint8_t context) {
  Slot& slot = slots_.at(context);
  if (!slot.held || slot.done) {
    throw SimulationError("receive context " + std::to_string(context) +
                          " completed without a packet in service");
  }
  slot.done = true;
}

std::size_t ReceiveStage::commit(const std::function<bool(Packet&&)>& sink) {
  std::size_t n = 0;
  while (slots_[next_commit_].held && slots_[next_commit_].done) {
    Slot& slot = slots_[next_commit_];
    const Reassembled whole = reassemble(slot.held->segments);
    if (whole.total_bytes != slot.held->packet.size_bytes) {
      throw ReassemblyError("packet " + std::to_string(whole.id) + ": size mismatch");
    }
    const std::uint32_t elems = slot.held->packet.elements();
    const PortId ingress = slot.held->packet.ingress_port % kIngressPorts;
    if (!sink(std::move(slot.held->packet))) break;
    rbuf_used_ -= elems;
    rbuf_by_port_[ingress] -= elems;
    slot.held.reset();
    slot.done = false;
    contexts_[next_commit_].holding.reset();
    next_commit_ = static_cast<std::uint8_t>((next_commit_ + 1) % kReceiveContexts);
    ++committed_;
    ++n;
  }
  return n;
}

std::uint32_t ReceiveStage::rbuf_used_by_port(PortId ingress) const {
  return rbuf_by_port_.at(ingress);
}

std::size_t ReceiveStage::resident() const {
  std::size_t n = waiting_.size();
  for (const auto& s : slots_) n += s.held ? 1 : 0;
  return n;
}

std::vector<PacketId> receive_dispatch(std::span<const TimedArrival> arrivals) {
  struct Done {
    std::uint8_t context;
  };
  ReceiveStage stage(static_cast<std::uint32_t>(arrivals.size() + 1) * kElementBytes);
  EventQueue<Done> events;
  std::vector<PacketId> committed;
  committed.reserve(arrivals.size());
  const auto sink = [&](Packet&& p) {
    committed.push_back(p.id);
    return true;
  };

  std::size_t next = 0;
  while (next < arrivals.size() || !events.empty()) {
    const bool take_arrival =
        next < arrivals.size() && (events.empty() || arrivals[next].at <= events.next_time());
    SimTime now;
    if (take_arrival) {
      now = arrivals[next].at;
      if (now < events.now()) throw SimulationError("arrivals are not ordered by time");
      Packet p;
      p.id = arrivals[next].id;
      p.t_created = now;
      stage.admit(p, arrivals[next].service);
      ++next;
    } else {
      auto e = events.pop();
      now = e.at;
      stage.complete(e.payload.context);
      stage.commit(sink);
    }
    for (const auto& d : stage.dispatch(now)) events.schedule(d.done_at, Done{d.context});
  }
  return committed;
}

}  // namespace npsim
