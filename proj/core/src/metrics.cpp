#include "npsim/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <numeric>
#include <string>

#include "npsim/errors.hpp"

namespace npsim {

namespace {

constexpr std::array<std::string_view, kEventKindCount> kEventNames = {
    "ARRIVE",   "ENQUEUE",         "REDIRECT",           "DEFER",    "PROMOTE",
    "TRANSMIT", "DROP_QUEUE_FULL", "DROP_DEFERRED_FULL", "DROP_TTL", "DROP_RED",
};

std::uint64_t count_in(const std::vector<SimTime>& times, TimeWindow w) {
  const auto lo = std::lower_bound(times.begin(), times.end(), w.begin);
  const auto hi = std::lower_bound(times.begin(), times.end(), w.end);
  return static_cast<std::uint64_t>(hi - lo);
}

template <typename T>
std::optional<T> parse_num(std::string_view s) {
  T v{};
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || ptr != end) return std::nullopt;
  return v;
}

std::uint64_t nearest_rank(std::vector<std::uint64_t>& v, double q) {
  const auto n = v.size();
  auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n)));
  rank = std::clamp<std::size_t>(rank, 1, n);
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(rank - 1), v.end());
  return v[rank - 1];
}

}  // namespace

std::string_view to_string(EventKind k) { return kEventNames[static_cast<std::size_t>(k)]; }

std::optional<EventKind> parse_event_kind(std::string_view s) {
  for (std::size_t i = 0; i < kEventNames.size(); ++i) {
    if (kEventNames[i] == s) return static_cast<EventKind>(i);
  }
  return std::nullopt;
}

std::optional<PacketFate> terminal_fate(EventKind k) {
  switch (k) {
    case EventKind::Transmit:
      return PacketFate::Transmitted;
    case EventKind::DropQueueFull:
      return PacketFate::DroppedQueueFull;
    case EventKind::DropDeferredFull:
      return PacketFate::DroppedDeferredFull;
    case EventKind::DropTtl:
      return PacketFate::DroppedTTL;
    case EventKind::DropRed:
      return PacketFate::DroppedRed;
    default:
      return std::nullopt;
  }
}

std::string format_event(const LifecycleEvent& e) {
  std::string out = std::to_string(e.at.ns);
  out += ' ';
  out += std::to_string(e.id);
  out += ' ';
  out += to_string(e.kind);
  out += ' ';
  out += e.traffic_class ? std::string(to_string(*e.traffic_class)) : "-";
  out += ' ';
  out += e.port ? std::to_string(*e.port) : "-";
  out += ' ';
  out += std::to_string(e.bytes);
  return out;
}

std::optional<LifecycleEvent> parse_event(std::string_view line) {
  std::array<std::string_view, 6> f;
  std::size_t n = 0;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && line[i] == ' ') ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\r') ++i;
    if (i > start) {
      if (n == f.size()) return std::nullopt;
      f[n++] = line.substr(start, i - start);
    }
    if (i < line.size() && line[i] == '\r') ++i;
  }
  if (n != f.size()) return std::nullopt;

  LifecycleEvent e;
  const auto t = parse_num<std::uint64_t>(f[0]);
  const auto id = parse_num<std::uint64_t>(f[1]);
  const auto kind = parse_event_kind(f[2]);
  const auto bytes = parse_num<std::uint32_t>(f[5]);
  if (!t || !id || !kind || !bytes) return std::nullopt;
  e.at = SimTime{*t};
  e.id = *id;
  e.kind = *kind;
  e.bytes = *bytes;
  if (f[3] != "-") {
    e.traffic_class = parse_traffic_class(f[3]);
    if (!e.traffic_class) return std::nullopt;
  }
  if (f[4] != "-") {
    const auto p = parse_num<unsigned>(f[4]);
    if (!p || *p > 255) return std::nullopt;
    e.port = static_cast<PortId>(*p);
  }
  return e;
}

MetricCounters::MetricCounters(std::size_t egress_ports)
    : ports_(egress_ports),
      packets_((kClassCount + 1) * (egress_ports + 1) * kFateCount, 0),
      bytes_(packets_.size(), 0),
      tx_times_(egress_ports),
      tx_cum_bytes_(egress_ports) {}

std::size_t MetricCounters::cell(std::optional<TrafficClass> c, std::optional<PortId> p,
                                 PacketFate f) const {
  const std::size_t ci = c ? index_of(*c) : kClassCount;
  const std::size_t pi = (p && *p < ports_) ? *p : ports_;
  return (ci * (ports_ + 1) + pi) * kFateCount + static_cast<std::size_t>(f);
}

std::uint64_t MetricCounters::packets(std::optional<TrafficClass> c, std::optional<PortId> p,
                                      PacketFate f) const {
  return packets_[cell(c, p, f)];
}

std::uint64_t MetricCounters::bytes(std::optional<TrafficClass> c, std::optional<PortId> p,
                                    PacketFate f) const {
  return bytes_[cell(c, p, f)];
}

std::uint64_t MetricCounters::dropped() const {
  std::uint64_t n = 0;
  for (std::size_t f = 0; f < kFateCount; ++f) {
    if (is_drop(static_cast<PacketFate>(f))) n += by_fate_[f];
  }
  return n;
}

std::uint64_t MetricCounters::tx_bytes(PortId port) const {
  const auto& cum = tx_cum_bytes_.at(port);
  return cum.empty() ? 0 : cum.back();
}

void MetricCounters::count_kind(const LifecycleEvent& e) {
  ++by_kind_[static_cast<std::size_t>(e.kind)];
  if (e.traffic_class) {
    ++by_kind_class_[static_cast<std::size_t>(e.kind)][index_of(*e.traffic_class)];
  }
}

void MetricCounters::record(const LifecycleEvent& e) {
  if (e.at < last_time_) {
    throw AuditError("event for packet " + std::to_string(e.id) + " at " +
                     std::to_string(e.at.ns) + "ns precedes previous event");
  }
  if (e.kind == EventKind::Arrive) {
    // Ids are issued in arrival order, so a reused id is caught even after
    // its packet has left.
    if (last_arrival_ && e.id <= *last_arrival_) {
      throw AuditError("arrival of packet " + std::to_string(e.id) + " after packet " +
                       std::to_string(*last_arrival_));
    }
    last_time_ = e.at;
    last_arrival_ = e.id;
    count_kind(e);
    live_.emplace(e.id, std::nullopt);
    ++generated_;
    rx_times_.at(e.port.value_or(0) % kIngressPorts).push_back(e.at);
    return;
  }

  auto it = live_.find(e.id);
  if (it == live_.end()) {
    throw AuditError("event " + std::string(to_string(e.kind)) + " for packet " +
                     std::to_string(e.id) + " which is not live (duplicate terminal event?)");
  }
  if (e.kind == EventKind::Transmit &&
      (!e.traffic_class || !e.port || *e.port >= ports_ || !it->second)) {
    throw AuditError("transmit of packet " + std::to_string(e.id) +
                     " without class, port or enqueue record");
  }
  last_time_ = e.at;
  count_kind(e);

  const bool decision = e.kind == EventKind::Enqueue || e.kind == EventKind::Redirect ||
                        e.kind == EventKind::Defer ||
                        (e.traffic_class && (e.kind == EventKind::DropQueueFull ||
                                             e.kind == EventKind::DropDeferredFull ||
                                             e.kind == EventKind::DropRed));
  if (decision && e.traffic_class) {
    ++offered_[index_of(*e.traffic_class)];
    offered_times_[index_of(*e.traffic_class)].push_back(e.at);
  }
  if (e.kind == EventKind::Enqueue || e.kind == EventKind::Redirect ||
      e.kind == EventKind::Defer) {
    it->second = e.at;
    return;
  }
  if (e.kind == EventKind::Promote) return;

  const auto fate = terminal_fate(e.kind);
  const std::size_t idx = cell(e.traffic_class, e.port, *fate);
  ++packets_[idx];
  bytes_[idx] += e.bytes;
  ++by_fate_[static_cast<std::size_t>(*fate)];

  if (*fate == PacketFate::Transmitted) {
    delays_[index_of(*e.traffic_class)].push_back((e.at - *it->second).ns);
    tx_times_[*e.port].push_back(e.at);
    const std::uint64_t prev = tx_cum_bytes_[*e.port].empty() ? 0 : tx_cum_bytes_[*e.port].back();
    tx_cum_bytes_[*e.port].push_back(prev + e.bytes);
  } else if (e.traffic_class) {
    ++class_drops_[index_of(*e.traffic_class)];
    drop_times_[index_of(*e.traffic_class)].push_back(e.at);
  }
  live_.erase(it);
}

std::uint64_t MetricCounters::offered_in(TrafficClass c, TimeWindow w) const {
  return count_in(offered_times_[index_of(c)], w);
}

std::uint64_t MetricCounters::dropped_in(TrafficClass c, TimeWindow w) const {
  return count_in(drop_times_[index_of(c)], w);
}

std::uint64_t MetricCounters::rx_in(PortId ingress, TimeWindow w) const {
  return count_in(rx_times_.at(ingress), w);
}

std::uint64_t MetricCounters::tx_packets_in(PortId port, TimeWindow w) const {
  return count_in(tx_times_.at(port), w);
}

std::uint64_t MetricCounters::tx_bytes_in(PortId port, TimeWindow w) const {
  const auto& times = tx_times_.at(port);
  const auto& cum = tx_cum_bytes_.at(port);
  const auto lo = std::lower_bound(times.begin(), times.end(), w.begin) - times.begin();
  const auto hi = std::lower_bound(times.begin(), times.end(), w.end) - times.begin();
  if (hi == 0 || hi <= lo) return 0;
  const std::uint64_t upto_hi = cum[static_cast<std::size_t>(hi - 1)];
  const std::uint64_t upto_lo = lo == 0 ? 0 : cum[static_cast<std::size_t>(lo - 1)];
  return upto_hi - upto_lo;
}

bool MetricCounters::operator==(const MetricCounters& o) const {
  return ports_ == o.ports_ && packets_ == o.packets_ && bytes_ == o.bytes_ &&
         generated_ == o.generated_ && by_fate_ == o.by_fate_ && offered_ == o.offered_ &&
         class_drops_ == o.class_drops_ && by_kind_ == o.by_kind_ &&
         by_kind_class_ == o.by_kind_class_ && delays_ == o.delays_ &&
         offered_times_ == o.offered_times_ && drop_times_ == o.drop_times_ &&
         rx_times_ == o.rx_times_ && tx_times_ == o.tx_times_ && tx_cum_bytes_ == o.tx_cum_bytes_ &&
         live_ == o.live_ && last_time_ == o.last_time_;
}

std::optional<double> loss_rate(const MetricCounters& m, TrafficClass c,
                                std::optional<TimeWindow> window) {
  const std::uint64_t offered = window ? m.offered_in(c, *window) : m.offered(c);
  if (offered == 0) return std::nullopt;
  const std::uint64_t dropped = window ? m.dropped_in(c, *window) : m.class_drops(c);
  return static_cast<double>(dropped) / static_cast<double>(offered);
}

std::optional<DelayStats> delay_stats(const MetricCounters& m, TrafficClass c) {
  const auto& samples = m.delay_samples(c);
  if (samples.empty()) return std::nullopt;
  std::vector<std::uint64_t> v(samples);
  DelayStats s;
  s.samples = v.size();
  // Sum in integers: exact, and independent of sample order.
  const auto sum = std::accumulate(v.begin(), v.end(), std::uint64_t{0});
  s.mean = static_cast<double>(sum) / static_cast<double>(v.size());
  s.max = *std::max_element(v.begin(), v.end());
  s.p50 = nearest_rank(v, 0.50);
  s.p99 = nearest_rank(v, 0.99);
  return s;
}

double throughput_bps(const MetricCounters& m, PortId port, TimeWindow w) {
  const std::uint64_t span = (w.end - w.begin).ns;
  if (span == 0) return 0.0;
  return static_cast<double>(m.tx_bytes_in(port, w)) * 8.0 * 1e9 / static_cast<double>(span);
}

StatusSnapshot status_snapshot(const MetricCounters& m, SimTime now, const BufferLevels& levels) {
  const TimeWindow trailing{now.ns >= kRateWindow.ns ? SimTime{now.ns - kRateWindow.ns + 1} : SimTime{},
                            SimTime{now.ns + 1}};
  const double per_second = 1e9 / static_cast<double>(kRateWindow.ns);

  StatusSnapshot snap;
  snap.at = now;

  StatusRow rx_device;
  rx_device.device = 0;
  std::uint64_t rx_total = 0;
  std::uint64_t rx_recent = 0;
  std::vector<StatusRow> rx_rows;
  for (PortId p = 0; p < kIngressPorts; ++p) {
    const std::uint64_t total = m.rx_in(p, TimeWindow{SimTime{}, SimTime{now.ns + 1}});
    const std::uint64_t recent = m.rx_in(p, trailing);
    rx_total += total;
    rx_recent += recent;
    StatusRow row;
    row.device = 0;
    row.port = p;
    row.rx_buffer_fullness = levels.rx_elements[p];
    row.packets_received = total;
    row.receive_rate_pps = static_cast<double>(recent) * per_second;
    rx_rows.push_back(row);
  }
  rx_device.packets_received = rx_total;
  rx_device.receive_rate_pps = static_cast<double>(rx_recent) * per_second;
  snap.rows.push_back(rx_device);
  snap.rows.insert(snap.rows.end(), rx_rows.begin(), rx_rows.end());

  StatusRow tx_device;
  tx_device.device = 1;
  std::uint64_t tx_total = 0;
  std::uint64_t tx_recent = 0;
  std::vector<StatusRow> tx_rows;
  for (PortId p = 0; p < m.egress_ports(); ++p) {
    const std::uint64_t total = m.tx_packets_in(p, TimeWindow{SimTime{}, SimTime{now.ns + 1}});
    const std::uint64_t recent = m.tx_packets_in(p, trailing);
    tx_total += total;
    tx_recent += recent;
    const std::uint32_t fullness = p < levels.tx_elements.size() ? levels.tx_elements[p] : 0;
    StatusRow row;
    row.device = 1;
    row.port = p;
    row.tx_buffer_fullness = fullness;
    row.packets_sent = total;
    row.transmit_rate_pps = static_cast<double>(recent) * per_second;
    tx_rows.push_back(row);
  }
  tx_device.packets_sent = tx_total;
  tx_device.transmit_rate_pps = static_cast<double>(tx_recent) * per_second;
  snap.rows.push_back(tx_device);
  snap.rows.insert(snap.rows.end(), tx_rows.begin(), tx_rows.end());
  return snap;
}

MetricCounters replay_event_log(std::istream& in, std::size_t egress_ports) {
  MetricCounters m(egress_ports);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line.front() == '#') continue;
    const auto e = parse_event(line);
    if (!e) throw AuditError("event log line " + std::to_string(lineno) + ": malformed record");
    m.record(*e);
  }
  return m;
}

}  // namespace npsim
