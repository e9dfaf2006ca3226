#pragma once

// Synthetic 1000-arrival traces for one RED-managed port, and a harness
// that feeds the same trace to npsim::RedPolicy and to oracle::RedOracle.

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "npsim/aqm.hpp"
#include "red_oracle.hpp"

namespace red_traces {

struct Step {
  std::uint64_t t = 0;
  std::uint32_t occupancy = 0;            // elements queued when the packet arrives
  std::optional<std::uint64_t> idle_at;   // the queue drained at this time before the arrival
};

struct Trace {
  std::string name;
  double w_q = 0.002;
  std::vector<Step> steps;
};

inline constexpr std::uint32_t kCapacity = 128;
inline constexpr std::uint64_t kRate = 155'000'000;

inline std::vector<Trace> regimes(std::uint64_t seed, std::size_t n = 1000) {
  std::mt19937_64 gen(seed);
  const auto uni = [&](std::uint32_t lo, std::uint32_t hi) {
    return std::uniform_int_distribution<std::uint32_t>(lo, hi)(gen);
  };
  std::vector<Trace> out;

  Trace below{"all-below-min", 0.002, {}};
  Trace above{"all-above-max", 0.02, {}};
  Trace straddle{"straddling", 0.05, {}};
  Trace bursty{"bursty", 0.02, {}};
  Trace gapped{"idle-gapped", 0.01, {}};
  std::uint64_t t1 = 0, t2 = 0, t3 = 0, t4 = 0, t5 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    t1 += 1000 + uni(0, 5000);
    below.steps.push_back({t1, uni(1, 30), {}});

    t2 += 1000 + uni(0, 5000);
    above.steps.push_back({t2, uni(100, kCapacity), {}});

    t3 += 1000 + uni(0, 5000);
    straddle.steps.push_back({t3, uni(20, 110), {}});

    t4 += 500 + uni(0, 2000);
    const bool burst = (i / 50) % 2 == 0;
    bursty.steps.push_back({t4, burst ? uni(110, kCapacity) : uni(1, 12), {}});

    t5 += 1000 + uni(0, 4000);
    if (i % 40 == 39) {
      const std::uint64_t drained = t5;
      t5 += 20'000 + uni(0, 400'000);
      gapped.steps.push_back({t5, 0, drained});
    } else {
      gapped.steps.push_back({t5, uni(40, 100), {}});
    }
  }
  out.push_back(std::move(below));
  out.push_back(std::move(above));
  out.push_back(std::move(straddle));
  out.push_back(std::move(bursty));
  out.push_back(std::move(gapped));
  return out;
}

enum Verdict { kAccept = 0, kDropRed = 1, kDropFull = 2 };

inline void set_occupancy(npsim::EgressQueue& q, std::uint32_t target, std::uint64_t t,
                          npsim::PacketId& filler_id) {
  while (q.occupancy() > target) {
    auto p = q.pop_next();
    q.release(p->elements());
  }
  while (q.occupancy() < target) {
    npsim::Packet f;
    f.id = filler_id++;
    f.traffic_class = npsim::TrafficClass::BE;
    f.t_created = npsim::SimTime{t};
    f.mark_enqueued(npsim::SimTime{t});
    q.admit(std::move(f));
  }
}

struct Comparison {
  std::vector<int> library;
  std::vector<int> reference;
  std::size_t red_drops = 0;
};

inline Comparison compare(const Trace& tr, std::uint64_t seed) {
  npsim::RedParams params;
  params.w_q = tr.w_q;
  std::vector<npsim::EgressQueue> ports;
  ports.emplace_back(0, kCapacity);
  const std::vector<std::uint64_t> rates{kRate};
  npsim::RedPolicy policy(params, ports, rates, seed);

  oracle::RedOracle ref{tr.w_q, 0.25 * kCapacity, 0.75 * kCapacity, 0.10,
                        npsim::serialization_time(64, kRate).ns, kCapacity};
  npsim::Rng rng(seed, npsim::RngStream::Red);
  const auto uniform = [&] { return rng.uniform01(); };

  Comparison c;
  npsim::PacketId filler = 1'000'000;
  npsim::PacketId id = 0;
  for (const auto& s : tr.steps) {
    if (s.idle_at) {
      set_occupancy(ports[0], 0, *s.idle_at, filler);
      policy.on_departure(ports, 0, npsim::SimTime{*s.idle_at});
      ref.went_idle(*s.idle_at);
    }
    set_occupancy(ports[0], s.occupancy, s.t, filler);

    npsim::Packet p;
    p.id = id++;
    p.traffic_class = npsim::TrafficClass::BE;
    p.t_created = npsim::SimTime{s.t};
    const auto v = policy.enqueue(ports, p, 0, npsim::SimTime{s.t});
    int lib = kAccept;
    if (const auto* d = std::get_if<npsim::verdict::Drop>(&v)) {
      lib = d->reason == npsim::DropReason::Red ? kDropRed : kDropFull;
    }
    c.library.push_back(lib);
    c.red_drops += lib == kDropRed;

    const auto o = ref.arrive(s.t, s.occupancy, 1, uniform);
    c.reference.push_back(o == oracle::RedVerdict::Accept    ? kAccept
                          : o == oracle::RedVerdict::DropRed ? kDropRed
                                                             : kDropFull);
  }
  return c;
}

}  // namespace red_traces
