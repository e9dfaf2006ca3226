#include <doctest.h>

#include <random>

#include "npsim/capsule.hpp"
#include "npsim/classifier.hpp"
#include "npsim/errors.hpp"
#include "npsim/traffic.hpp"

using namespace npsim;

namespace {

Packet packet_of(PacketKind kind, std::uint32_t flow = 0, std::uint8_t ttl = 64) {
  Packet p;
  p.flow = flow_key_for(flow, kind);
  p.kind = kind;
  p.ttl = ttl;
  return p;
}

Packet capsule_packet(std::string wire) {
  Packet p;
  p.flow = control_flow_key();
  p.capsule = Capsule{std::move(wire), {}};
  return p;
}

std::vector<EgressQueue> five_ports() {
  std::vector<EgressQueue> q;
  for (PortId i = 0; i < 5; ++i) q.emplace_back(i, 128);
  return q;
}

}  // namespace

TEST_SUITE("classifier") {
  TEST_CASE("default classes and ports") {
    Classifier c;
    auto rtp = packet_of(PacketKind::RTP_UDP);
    const auto r = c.classify(rtp, SimTime{});
    CHECK_FALSE(r.ttl_expired);
    CHECK(r.traffic_class == TrafficClass::EF);
    CHECK(r.egress_port == 0);
    CHECK(rtp.ttl == 63);
    CHECK(rtp.traffic_class == TrafficClass::EF);
    CHECK(rtp.egress_port == 0);

    auto udp = packet_of(PacketKind::UDP_LARGE_TTL, 1);
    CHECK(c.classify(udp, SimTime{}).traffic_class == TrafficClass::AF);
    auto tcp = packet_of(PacketKind::TCP, 2);
    const auto t = c.classify(tcp, SimTime{});
    CHECK(t.traffic_class == TrafficClass::BE);
    CHECK((t.egress_port == 3 || t.egress_port == 4));
  }

  TEST_CASE("ttl 1 expires at this hop") {
    Classifier c;
    auto p = packet_of(PacketKind::UDP_SMALL_TTL, 0, 1);
    const auto r = c.classify(p, SimTime{});
    CHECK(r.ttl_expired);
    CHECK(p.fate() == PacketFate::DroppedTTL);
    CHECK_FALSE(p.traffic_class.has_value());
    CHECK(c.stats().ttl_drops == 1);
    CHECK(c.table().size() == 0);

    auto two = packet_of(PacketKind::UDP_SMALL_TTL, 0, 2);
    CHECK_FALSE(c.classify(two, SimTime{}).ttl_expired);
    CHECK(two.ttl == 1);
  }

  TEST_CASE("second packet of a flow hits the table with the same decision") {
    Classifier c;
    auto a = packet_of(PacketKind::TCP, 5);
    auto b = packet_of(PacketKind::TCP, 5);
    const auto ra = c.classify(a, SimTime{100});
    // Load changes must not flap an already-cached flow.
    c.update_load(ra.egress_port, PortLoad{0, 120});
    const auto rb = c.classify(b, SimTime{200});
    CHECK_FALSE(ra.fast_path);
    CHECK(rb.fast_path);
    CHECK(ra.traffic_class == rb.traffic_class);
    CHECK(ra.egress_port == rb.egress_port);
    const auto* e = c.table().find(a.flow);
    REQUIRE(e);
    CHECK(e->hits == 1);
    CHECK(e->last_hit == SimTime{200});
  }

  TEST_CASE("slow path picks the least-loaded candidate, lowest port on ties") {
    Classifier c;
    auto p = packet_of(PacketKind::TCP);
    c.update_load(3, PortLoad{10, 50});
    c.update_load(4, PortLoad{10, 20});
    auto e = c.slow_path(p, SimTime{7});
    CHECK(e.traffic_class == TrafficClass::BE);
    CHECK(e.egress_port == 4);
    CHECK(e.last_hit == SimTime{7});

    c.update_load(4, PortLoad{10, 50});
    CHECK(c.slow_path(p, SimTime{}).egress_port == 3);
  }

  TEST_CASE("random misses always install a port routed for their class") {
    Classifier c;
    std::mt19937_64 gen(3);
    const auto routing = RoutingPolicy::defaults();
    for (int i = 0; i < 1000; ++i) {
      for (PortId p = 0; p < 5; ++p) c.update_load(p, PortLoad{0, static_cast<std::uint32_t>(gen() % 128)});
      const auto kind = static_cast<PacketKind>(gen() % kKindCount);
      auto pkt = packet_of(kind, 1000 + i);
      const auto r = c.classify(pkt, SimTime{static_cast<std::uint64_t>(i)});
      CHECK_FALSE(r.fast_path);
      const auto& allowed = routing.ports_for(r.traffic_class);
      CHECK(std::find(allowed.begin(), allowed.end(), r.egress_port) != allowed.end());
      const auto* e = c.table().find(pkt.flow);
      REQUIRE(e);
      CHECK(e->egress_port == r.egress_port);
    }
  }

  TEST_CASE("refresh evicts only entries idle for more than one interval") {
    Classifier c;
    auto recent = packet_of(PacketKind::TCP, 1);
    auto stale = packet_of(PacketKind::TCP, 2);
    c.classify(stale, SimTime::from_ms(40));
    c.classify(recent, SimTime::from_ms(90));
    CHECK(c.refresh_table(SimTime::from_ms(100)) == 1);
    CHECK(c.table().find(recent.flow));
    CHECK_FALSE(c.table().find(stale.flow));

    // Exactly one interval old is not "older than" the interval.
    Classifier edge;
    auto p = packet_of(PacketKind::TCP, 3);
    edge.classify(p, SimTime::from_ms(50));
    CHECK(edge.refresh_table(SimTime::from_ms(100)) == 0);

    // Evicted flows take the slow path again.
    auto again = packet_of(PacketKind::TCP, 2);
    CHECK_FALSE(c.classify(again, SimTime::from_ms(101)).fast_path);
  }

  TEST_CASE("a 1000 pkt/s flow survives ten refreshes") {
    Classifier c;
    std::uint64_t next_refresh = 50'000'000;
    std::size_t evicted = 0;
    for (std::uint64_t t = 0; t <= 500'000'000; t += 1'000'000) {
      while (next_refresh <= t) {
        evicted += c.refresh_table(SimTime{next_refresh});
        next_refresh += 50'000'000;
      }
      auto p = packet_of(PacketKind::RTP_UDP, 9);
      c.classify(p, SimTime{t});
    }
    CHECK(evicted == 0);
    CHECK(c.stats().slow_path == 1);
  }

  TEST_CASE("full table evicts the stalest entry first") {
    FlowTable t(3);
    for (std::uint32_t i = 0; i < 3; ++i) {
      t.insert(FlowTableEntry{flow_key_for(i, PacketKind::TCP), TrafficClass::BE, 3,
                              SimTime{100 - i}, 0});
    }
    t.insert(FlowTableEntry{flow_key_for(10, PacketKind::TCP), TrafficClass::BE, 3, SimTime{200}, 0});
    CHECK(t.size() == 3);
    CHECK_FALSE(t.find(flow_key_for(2, PacketKind::TCP)));
    CHECK(t.find(flow_key_for(0, PacketKind::TCP)));

    // On equal staleness the smallest key goes.
    FlowTable tie(2);
    const auto k0 = flow_key_for(0, PacketKind::TCP);
    const auto k1 = flow_key_for(1, PacketKind::TCP);
    tie.insert(FlowTableEntry{k1, TrafficClass::BE, 3, SimTime{5}, 0});
    tie.insert(FlowTableEntry{k0, TrafficClass::BE, 3, SimTime{5}, 0});
    tie.insert(FlowTableEntry{flow_key_for(2, PacketKind::TCP), TrafficClass::BE, 3, SimTime{6}, 0});
    CHECK_FALSE(tie.find(k0));
    CHECK(tie.find(k1));
  }

  TEST_CASE("table never exceeds its bound under a flow storm") {
    ClassifierConfig cfg;
    cfg.table_max = 64;
    Classifier c(cfg);
    for (std::uint32_t i = 0; i < 1000; ++i) {
      auto p = packet_of(PacketKind::UDP_LARGE_TTL, i);
      c.classify(p, SimTime{i});
      CHECK(c.table().size() <= 64);
    }
  }

  TEST_CASE("capsule sets a flow privileged") {
    Classifier c;
    auto queues = five_ports();
    auto victim = packet_of(PacketKind::TCP, 4);
    c.classify(victim, SimTime{1});
    const auto& f = victim.flow;
    auto cap = capsule_packet("CAPSULE SET_FLOW_PRIORITY " + format_ipv4(f.src_addr) + " " +
                              format_ipv4(f.dst_addr) + " " + std::to_string(f.src_port) + " " +
                              std::to_string(f.dst_port) + " TCP PRIV");
    const auto cr = c.classify(cap, SimTime{2});
    CHECK(cr.traffic_class == TrafficClass::BE);
    CHECK(c.apply_capsule(cap, queues, SimTime{2}) == CapsuleOutcome::Applied);
    auto next = packet_of(PacketKind::TCP, 4);
    const auto r = c.classify(next, SimTime{3});
    CHECK(r.traffic_class == TrafficClass::PRIV);
    CHECK(r.egress_port == 0);
    // Capsule packets are never cached.
    CHECK_FALSE(c.table().find(control_flow_key()));
  }

  TEST_CASE("capsule sets a port threshold") {
    Classifier c;
    auto queues = five_ports();
    auto cap = capsule_packet("CAPSULE SET_PORT_THRESHOLD 0 0.85");
    CHECK(c.apply_capsule(cap, queues, SimTime{}) == CapsuleOutcome::Applied);
    CHECK(queues[0].soft_threshold() == 108);
    auto half = capsule_packet("CAPSULE SET_PORT_THRESHOLD 2 0.5");
    c.apply_capsule(half, queues, SimTime{});
    CHECK(queues[2].soft_threshold() == 64);
  }

  TEST_CASE("trace capsules log the node") {
    ClassifierConfig cfg;
    cfg.node_id = 42;
    Classifier c(cfg);
    auto queues = five_ports();
    auto cap = capsule_packet("CAPSULE TRACE");
    CHECK(c.apply_capsule(cap, queues, SimTime{}) == CapsuleOutcome::Applied);
    CHECK(cap.capsule->trace_log == std::vector<std::uint32_t>{42});
  }

  TEST_CASE("malformed and unknown capsules are ignored and counted") {
    Classifier c;
    auto queues = five_ports();
    for (const char* wire : {"CAPSULE REBOOT", "CAPSULE", "HELLO", "CAPSULE SET_PORT_THRESHOLD 0 1.5",
                             "CAPSULE SET_PORT_THRESHOLD 9 0.5", "CAPSULE SET_PORT_THRESHOLD 0 0",
                             "CAPSULE SET_FLOW_PRIORITY 1.2.3 1.2.3.4 1 2 TCP EF",
                             "CAPSULE TRACE extra", "\x01\x02"}) {
      auto cap = capsule_packet(wire);
      CHECK_MESSAGE(c.apply_capsule(cap, queues, SimTime{}) == CapsuleOutcome::Ignored, wire);
    }
    CHECK(c.stats().capsules_ignored == 9);
    CHECK(queues[0].soft_threshold() == 108);
  }

  TEST_CASE("capsule text round-trips") {
    const CapsuleDirective ds[] = {
        SetFlowPriority{flow_key_for(3, PacketKind::RTP_UDP), TrafficClass::PRIV},
        SetPortThreshold{4, 0.625}, Trace{}};
    for (const auto& d : ds) CHECK(parse_capsule(format_capsule(d)) == d);
    CHECK(parse_ipv4("10.0.0.1") == 0x0A000001U);
    CHECK_FALSE(parse_ipv4("256.0.0.1"));
    CHECK(format_ipv4(0xC0A80001U) == "192.168.0.1");
  }

  TEST_CASE("routing validation rejects bad maps") {
    auto r = RoutingPolicy::defaults();
    CHECK_NOTHROW(r.validate(5));
    CHECK_THROWS_AS(r.validate(3), ConfigError);
    r.class_to_port[index_of(TrafficClass::AF)].clear();
    CHECK_THROWS_AS(r.validate(5), ConfigError);
    CHECK(RoutingPolicy::defaults().low_priority_ports() == std::vector<PortId>{1, 2, 3, 4});
  }
}
