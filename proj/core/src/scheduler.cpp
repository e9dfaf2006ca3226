#include "npsim/scheduler.hpp"

#include <string>

#include "npsim/errors.hpp"

namespace npsim {

PortLink::PortLink(PortId port, std::uint64_t rate_bps) : port_(port), rate_bps_(rate_bps) {
  if (rate_bps == 0) throw ConfigError("ports.rate: must be positive");
}

SimTime PortLink::transmit(Packet&& pkt, SimTime now) {
  if (!idle(now)) {
    throw SimulationError("port " + std::to_string(port_) + ": transmit while busy until " +
                          std::to_string(busy_until_.ns) + "ns");
  }
  busy_until_ = now + serialization_time(pkt.size_bytes, rate_bps_);
  in_service_ = std::move(pkt);
  return busy_until_;
}

Packet PortLink::complete(SimTime now) {
  if (!in_service_) {
    throw SimulationError("port " + std::to_string(port_) + ": completion with idle link");
  }
  if (now < busy_until_) {
    throw SimulationError("port " + std::to_string(port_) + ": completion before serialization end");
  }
  Packet p = std::move(*in_service_);
  in_service_.reset();
  p.mark_transmitted(now);
  ++tx_count_;
  tx_bytes_ += p.size_bytes;
  return p;
}

bool publish_tx_feedback(const PortLink& link, std::uint32_t occupancy, Classifier& classifier,
                         std::uint32_t every_n) {
  if (every_n == 0 || link.tx_count() == 0 || link.tx_count() % every_n != 0) return false;
  classifier.update_load(link.port(), PortLoad{link.tx_count(), occupancy});
  return true;
}

}  // namespace npsim
