#include "npsim/report.hpp"

#include <cstdio>
#include <iomanip>
#include <sstream>

#include <json.hpp>

namespace npsim {

namespace {

using nlohmann::json;

std::string hex(std::uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

json optional_number(std::optional<double> v) { return v ? json(*v) : json(nullptr); }

constexpr PacketFate kTerminalFates[] = {PacketFate::Transmitted, PacketFate::DroppedQueueFull,
                                         PacketFate::DroppedDeferredFull, PacketFate::DroppedTTL,
                                         PacketFate::DroppedRed};

json run_json(const RunResult& r) {
  const auto& m = r.metrics;
  json j;
  j["scenario"] = r.scenario;
  j["policy"] = std::string(to_string(r.policy));
  j["seed"] = m.metadata.seed;
  j["config_hash"] = hex(m.metadata.config_hash);
  j["arrival_hash"] = hex(m.metadata.arrival_hash);
  j["duration_ns"] = m.metadata.duration.ns;

  json packets;
  packets["generated"] = m.generated();
  packets["transmitted"] = m.transmitted();
  packets["dropped"] = m.dropped();
  packets["resident"] = m.resident();
  for (auto f : kTerminalFates) packets["by_fate"][std::string(to_string(f))] = m.with_fate(f);
  j["packets"] = packets;

  for (auto c : kAllClasses) {
    json cj;
    cj["offered"] = m.offered(c);
    cj["dropped"] = m.class_drops(c);
    cj["loss_rate"] = optional_number(loss_rate(m, c));
    if (const auto d = delay_stats(m, c)) {
      cj["delay_ns"] = {{"mean", d->mean}, {"p50", d->p50}, {"p99", d->p99},
                        {"max", d->max}, {"samples", d->samples}};
    } else {
      cj["delay_ns"] = nullptr;
    }
    j["classes"][std::string(to_string(c))] = cj;
  }

  const TimeWindow whole{SimTime{}, m.metadata.duration};
  json ports = json::array();
  for (PortId p = 0; p < m.egress_ports(); ++p) {
    ports.push_back({{"port", p},
                     {"tx_packets", m.tx_packets(p)},
                     {"tx_bytes", m.tx_bytes(p)},
                     {"throughput_bps", throughput_bps(m, p, whole)}});
  }
  j["ports"] = ports;

  const auto& ps = r.pipeline;
  j["pipeline"] = {{"events_processed", ps.events_processed}, {"rbuf_drops", ps.rbuf_drops},
                   {"ring_blocked", ps.ring_blocked},         {"selections", ps.selections},
                   {"feedback_events", ps.feedback_events},   {"promotions", ps.promotions}};
  const auto& cs = r.classifier;
  j["classifier"] = {{"fast_path", cs.fast_path},
                     {"slow_path", cs.slow_path},
                     {"ttl_drops", cs.ttl_drops},
                     {"evictions", cs.evictions},
                     {"capsules_applied", cs.capsules_applied},
                     {"capsules_ignored", cs.capsules_ignored},
                     {"load_updates", cs.load_updates}};
  return j;
}

}  // namespace

std::string summary_json(const RunResult& r) { return run_json(r).dump(2) + "\n"; }

std::string counters_csv(const MetricCounters& m) {
  std::ostringstream out;
  out << "class,port,fate,packets,bytes\n";
  std::vector<std::optional<TrafficClass>> classes(kAllClasses, kAllClasses + kClassCount);
  classes.push_back(std::nullopt);
  for (const auto& c : classes) {
    for (std::size_t p = 0; p <= m.egress_ports(); ++p) {
      const std::optional<PortId> port =
          p < m.egress_ports() ? std::optional<PortId>(static_cast<PortId>(p)) : std::nullopt;
      for (auto f : kTerminalFates) {
        out << (c ? to_string(*c) : "-") << ',' << (port ? std::to_string(*port) : "-") << ','
            << to_string(f) << ',' << m.packets(c, port, f) << ',' << m.bytes(c, port, f) << '\n';
      }
    }
  }
  return out.str();
}

std::string comparison_json(const ComparisonReport& c) {
  json j;
  j["scenario"] = c.scenario;
  j["runs"] = json::array();
  for (const auto& r : c.runs) j["runs"].push_back(run_json(r));
  j["failures"] = json::array();
  for (const auto& f : c.failures) {
    j["failures"].push_back({{"policy", std::string(to_string(f.policy))}, {"error", f.message}});
  }
  j["deltas"] = json::array();
  for (const auto& d : c.deltas) {
    json dj;
    dj["policy"] = std::string(to_string(d.policy));
    dj["baseline"] = std::string(to_string(d.baseline));
    for (const auto& cd : d.classes) {
      dj["classes"][std::string(to_string(cd.traffic_class))] = {
          {"loss_rate_delta", optional_number(cd.loss_delta)},
          {"mean_delay_ns_delta", optional_number(cd.mean_delay_delta)}};
    }
    j["deltas"].push_back(dj);
  }
  j["anaqm_beats_red"] = c.anaqm_beats_red ? json(*c.anaqm_beats_red) : json(nullptr);
  j["arrival_streams_match"] = c.arrival_streams_match;
  return j.dump(2) + "\n";
}

std::string format_status(const StatusSnapshot& s) {
  std::ostringstream out;
  const auto cell = [&](auto v, int width) {
    if (v) {
      out << std::setw(width) << *v;
    } else {
      out << std::setw(width) << "-";
    }
  };
  out << "status at " << s.at.ns << " ns\n";
  out << std::setw(6) << "device" << std::setw(6) << "port" << std::setw(8) << "rxbuf" << std::setw(8)
      << "txbuf" << std::setw(12) << "received" << std::setw(14) << "rx pkt/s" << std::setw(12)
      << "sent" << std::setw(14) << "tx pkt/s" << '\n';
  out << std::fixed << std::setprecision(0);
  for (const auto& r : s.rows) {
    out << std::setw(6) << static_cast<int>(r.device);
    cell(r.port ? std::optional<int>(*r.port) : std::nullopt, 6);
    cell(r.rx_buffer_fullness, 8);
    cell(r.tx_buffer_fullness, 8);
    cell(r.packets_received, 12);
    cell(r.receive_rate_pps, 14);
    cell(r.packets_sent, 12);
    cell(r.transmit_rate_pps, 14);
    out << '\n';
  }
  return out.str();
}

}  // namespace npsim
