#include <doctest.h>

#include <deque>
#include <random>

#include "npsim/errors.hpp"
#include "npsim/event_queue.hpp"
#include "npsim/receive_stage.hpp"
#include "npsim/ring_buffer.hpp"
#include "npsim/simulation.hpp"

using namespace npsim;

namespace {

SimulationConfig short_config(std::uint64_t ms = 5) {
  SimulationConfig cfg;
  cfg.traffic.duration = SimTime::from_ms(ms);
  cfg.traffic.start_window = SimTime::from_ms(1);
  return cfg;
}

}  // namespace

TEST_SUITE("pipeline_engine") {
  TEST_CASE("ring put and get at the edges") {
    RingBuffer<int> r(4);
    CHECK(r.put(1) == RingPut::Accepted);
    CHECK(r.occupancy() == 1);
    r.put(2);
    r.put(3);
    r.put(4);
    CHECK(r.full());
    CHECK(r.put(5) == RingPut::Blocked);
    CHECK(r.occupancy() == 4);
    CHECK(r.get() == 1);
    CHECK(r.get() == 2);

    RingBuffer<int> empty(4);
    CHECK_FALSE(empty.get().has_value());
    CHECK_THROWS(RingBuffer<int>(0));
  }

  TEST_CASE("ring matches a FIFO model under random interleaving") {
    std::mt19937_64 gen(11);
    RingBuffer<int> ring(7);
    std::deque<int> model;
    std::uint64_t puts = 0, gets = 0;
    int next = 0;
    for (int step = 0; step < 1000; ++step) {
      if (gen() % 2) {
        const bool room = model.size() < 7;
        const auto r = ring.put(int{next});
        CHECK((r == RingPut::Accepted) == room);
        if (room) {
          model.push_back(next);
          ++puts;
        }
        ++next;
      } else {
        const auto got = ring.get();
        if (model.empty()) {
          CHECK_FALSE(got.has_value());
        } else {
          REQUIRE(got.has_value());
          CHECK(*got == model.front());
          model.pop_front();
          ++gets;
        }
      }
      CHECK(ring.occupancy() == model.size());
      CHECK(ring.occupancy() == puts - gets);
      CHECK(ring.put_count() == puts);
      CHECK(ring.get_count() == gets);
    }
  }

  TEST_CASE("blocked put leaves the item with the caller") {
    RingBuffer<std::string> r(1);
    std::string a = "first", b = "second";
    r.put(std::move(a));
    CHECK(r.put(std::move(b)) == RingPut::Blocked);
    CHECK(b == "second");
  }

  TEST_CASE("receive stage commits in arrival order") {
    const std::vector<TimedArrival> ab = {{SimTime{0}, 1, SimTime{500}}, {SimTime{100}, 2, SimTime{50}}};
    CHECK(receive_dispatch(ab) == std::vector<PacketId>{1, 2});

    const std::vector<TimedArrival> one = {{SimTime{0}, 9, SimTime{70}}};
    CHECK(receive_dispatch(one) == std::vector<PacketId>{9});
  }

  TEST_CASE("receive stage holds an early finisher until its turn") {
    ReceiveStage rx;
    Packet a, b;
    a.id = 1;
    b.id = 2;
    REQUIRE(rx.admit(a, SimTime{500}));
    REQUIRE(rx.admit(b, SimTime{50}));
    const auto d = rx.dispatch(SimTime{0});
    REQUIRE(d.size() == 2);
    CHECK(d[0].context == 0);
    CHECK(d[1].context == 1);
    std::vector<PacketId> out;
    const auto sink = [&](Packet&& p) {
      out.push_back(p.id);
      return true;
    };
    rx.complete(1);
    CHECK(rx.commit(sink) == 0);
    rx.complete(0);
    CHECK(rx.commit(sink) == 2);
    CHECK(out == std::vector<PacketId>{1, 2});
    CHECK(rx.rbuf_used() == 0);
  }

  TEST_CASE("10000 arrivals with random service commit as an identity permutation") {
    std::mt19937_64 gen(5);
    std::vector<TimedArrival> arrivals;
    std::uint64_t t = 0;
    for (PacketId i = 0; i < 10'000; ++i) {
      t += gen() % 200;
      arrivals.push_back({SimTime{t}, i, SimTime{1 + gen() % 2000}});
    }
    const auto committed = receive_dispatch(arrivals);
    REQUIRE(committed.size() == arrivals.size());
    for (PacketId i = 0; i < committed.size(); ++i) CHECK(committed[i] == i);
  }

  TEST_CASE("RBUF refuses packets beyond its element pool") {
    ReceiveStage rx(4);
    Packet big;
    big.size_bytes = 200;  // 4 elements
    CHECK(rx.admit(big, SimTime{10}));
    Packet more;
    more.size_bytes = 20;
    CHECK_FALSE(rx.admit(more, SimTime{10}));
    CHECK(rx.rbuf_used() == 4);
  }

  TEST_CASE("event queue orders by time then insertion and rejects the past") {
    EventQueue<int> q;
    q.schedule(SimTime{10}, 1);
    q.schedule(SimTime{5}, 2);
    q.schedule(SimTime{10}, 3);
    q.schedule(SimTime{5}, 4);
    std::vector<int> order;
    while (!q.empty()) order.push_back(q.pop().payload);
    CHECK(order == std::vector<int>{2, 4, 1, 3});
    CHECK(q.now() == SimTime{10});
    CHECK_THROWS_AS(q.schedule(SimTime{9}, 5), SimulationError);
    CHECK_NOTHROW(q.schedule(SimTime{10}, 6));
  }

  TEST_CASE("empty scenario processes no events") {
    SimulationConfig cfg;
    cfg.traffic.duration = SimTime{};
    cfg.traffic.start_window = SimTime{};
    Simulation sim(cfg);
    const auto& m = sim.run();
    CHECK(sim.stats().events_processed == 0);
    CHECK(m.generated() == 0);
    CHECK(m.transmitted() == 0);
    CHECK(m.dropped() == 0);
  }

  TEST_CASE("same scenario twice gives identical counters") {
    for (auto policy : {PolicyKind::DropTail, PolicyKind::Red, PolicyKind::AnAqm}) {
      auto cfg = short_config();
      cfg.policy = policy;
      Simulation a(cfg), b(cfg);
      a.run();
      b.run();
      CHECK(a.metrics() == b.metrics());
      CHECK(a.arrival_hash() == b.arrival_hash());
      CHECK(a.stats().events_processed == b.stats().events_processed);
    }
  }

  TEST_CASE("arrival hash does not depend on the policy") {
    auto cfg = short_config();
    cfg.policy = PolicyKind::DropTail;
    Simulation a(cfg);
    cfg.policy = PolicyKind::AnAqm;
    Simulation b(cfg);
    a.run();
    b.run();
    CHECK(a.arrival_hash() == b.arrival_hash());
  }

  TEST_CASE("event times never go backwards and conservation holds at every snapshot") {
    auto cfg = short_config(20);
    cfg.snapshot_interval = SimTime::from_us(250);
    Simulation sim(cfg);
    SimTime last;
    bool monotone = true;
    sim.set_event_sink([&](const LifecycleEvent& e, const FlowKey&) {
      monotone = monotone && e.at >= last;
      last = e.at;
    });
    CHECK_NOTHROW(sim.run());
    CHECK(monotone);
    CHECK(sim.snapshots().size() == 80);
    const auto& m = sim.metrics();
    CHECK(m.generated() == m.transmitted() + m.dropped() + sim.resident());
  }

  TEST_CASE("running in pieces equals running at once") {
    auto cfg = short_config(10);
    Simulation whole(cfg), pieces(cfg);
    whole.run();
    pieces.run(SimTime::from_ms(3));
    pieces.run(SimTime::from_ms(7));
    pieces.run();
    CHECK(whole.metrics() == pieces.metrics());
  }

  TEST_CASE("a slow classifier backs up the ring without losing packets there") {
    auto cfg = short_config(3);
    cfg.pipeline.ring_capacity = 2;
    cfg.pipeline.classify_service = SimTime::from_ns(900);
    Simulation sim(cfg);
    sim.run();
    CHECK(sim.stats().ring_blocked > 0);
    // Overload backs up into RBUF, which is where ingress loss shows up.
    CHECK(sim.stats().rbuf_drops > 0);
    const auto& m = sim.metrics();
    CHECK(m.packets(std::nullopt, std::nullopt, PacketFate::DroppedQueueFull) ==
          sim.stats().rbuf_drops);
    CHECK(m.generated() == m.transmitted() + m.dropped() + sim.resident());
  }

  TEST_CASE("configuration errors are reported before running") {
    auto cfg = short_config();
    cfg.ports.rate_bps = {1, 2};
    CHECK_THROWS_AS(Simulation{cfg}, ConfigError);
    cfg = short_config();
    cfg.pipeline.ring_capacity = 0;
    CHECK_THROWS_AS(Simulation{cfg}, ConfigError);
    cfg = short_config();
    cfg.classifier.routing.class_to_port[index_of(TrafficClass::EF)] = {7};
    CHECK_THROWS_AS(Simulation{cfg}, ConfigError);
  }
}
