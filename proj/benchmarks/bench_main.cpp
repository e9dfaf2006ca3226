#include <benchmark/benchmark.h>

#include <vector>

#include "npsim/aqm.hpp"
#include "npsim/classifier.hpp"
#include "npsim/simulation.hpp"

using namespace npsim;

namespace {

void BM_Segment(benchmark::State& state) {
  Packet p;
  p.size_bytes = static_cast<std::uint32_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(segment_packet(p));
}
BENCHMARK(BM_Segment)->Arg(64)->Arg(1500);

// Enqueue then dequeue at half occupancy so the RED average stays busy.
void BM_RedEnqueue(benchmark::State& state) {
  std::vector<EgressQueue> ports;
  for (PortId i = 0; i < kEgressPorts; ++i) ports.emplace_back(i, 128);
  const std::vector<std::uint64_t> rates(kEgressPorts, 155'000'000);
  RedPolicy red(RedParams{}, ports, rates, 1);
  PacketId id = 0;
  std::uint64_t t = 0;
  for (auto _ : state) {
    Packet p;
    p.id = id++;
    p.traffic_class = TrafficClass::BE;
    t += 100;
    benchmark::DoNotOptimize(red.enqueue(ports, p, 0, SimTime{t}));
    if (ports[0].occupancy() > 64) {
      if (auto out = ports[0].pop_next()) ports[0].release(out->elements());
    }
  }
}
BENCHMARK(BM_RedEnqueue);

void BM_ClassifyFastPath(benchmark::State& state) {
  Classifier c;
  std::vector<Packet> packets(64);
  for (std::size_t i = 0; i < packets.size(); ++i) {
    packets[i].flow.src_port = static_cast<std::uint16_t>(1000 + i);
    packets[i].kind = static_cast<PacketKind>(i % kKindCount);
  }
  std::size_t i = 0;
  std::uint64_t t = 0;
  for (auto _ : state) {
    Packet p = packets[i++ % packets.size()];
    benchmark::DoNotOptimize(c.classify(p, SimTime{t += 10}));
  }
}
BENCHMARK(BM_ClassifyFastPath);

// Whole event loop: 5 ms of the congestion workload per iteration.
void BM_EventLoop(benchmark::State& state) {
  SimulationConfig cfg;
  cfg.traffic.duration = SimTime::from_ms(5);
  cfg.traffic.start_window = SimTime::from_ms(1);
  cfg.policy = static_cast<PolicyKind>(state.range(0));
  std::uint64_t events = 0;
  for (auto _ : state) {
    Simulation sim(cfg);
    sim.run();
    events += sim.stats().events_processed;
  }
  state.counters["events/s"] = benchmark::Counter(static_cast<double>(events), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_EventLoop)->Arg(0)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
