#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "npsim/egress_queue.hpp"
#include "npsim/model.hpp"
#include "npsim/rng.hpp"

namespace npsim {

enum class DropReason : std::uint8_t { QueueFull, DeferredFull, Red };

namespace verdict {
struct Accept {
  PortId port = 0;
  bool operator==(const Accept&) const = default;
};
struct Redirect {
  PortId from_port = 0;
  PortId to_port = 0;
  bool operator==(const Redirect&) const = default;
};
struct Defer {
  PortId port = 0;
  bool operator==(const Defer&) const = default;
};
struct Drop {
  DropReason reason = DropReason::QueueFull;
  bool operator==(const Drop&) const = default;
};
}  // namespace verdict

/// Outcome of one enqueue attempt.
using EnqueueVerdict =
    std::variant<verdict::Accept, verdict::Redirect, verdict::Defer, verdict::Drop>;

PacketFate fate_for(DropReason r);

// ---------------------------------------------------------------------------
// Drop-tail

/// Accepts while the packet's elements fit, otherwise drops with QueueFull.
EnqueueVerdict droptail_enqueue(EgressQueue& q, Packet& pkt, SimTime now);

// ---------------------------------------------------------------------------
// RED

struct RedParams {
  double w_q = 0.002;
  std::optional<double> min_th;  // elements; defaults to 0.25 * capacity
  std::optional<double> max_th;  // elements; defaults to 0.75 * capacity
  double max_p = 0.10;

  void validate() const;
  bool operator==(const RedParams&) const = default;
};

struct RedState {
  double avg = 0.0;
  double w_q = 0.002;
  double min_th = 32.0;
  double max_th = 96.0;
  double max_p = 0.10;
  /// Packets since the last drop; -1 after the average was below min_th.
  std::int64_t count = -1;
  std::optional<SimTime> idle_since = SimTime{};

  static RedState from_params(const RedParams& p, std::uint32_t capacity_elems);
};

/// EWMA update at an arrival. With a non-empty queue the average moves
/// toward `occupancy`; with an empty queue it decays by (1 - w_q)^m, m being
/// the number of `typical_tx` intervals since the queue went idle.
double red_update_avg(RedState& s, std::uint32_t occupancy, SimTime now, SimTime typical_tx);

enum class RedDecision : std::uint8_t { Accept, EarlyDrop, ForcedDrop };

/// The probabilistic mark decision on the current average. Draws one
/// uniform from `rng` only when min_th <= avg < max_th.
RedDecision red_decide(RedState& s, Rng& rng);

/// RED admission on an already-updated average; a full queue still drops
/// with QueueFull when RED itself would accept.
EnqueueVerdict red_enqueue(RedState& s, EgressQueue& q, Packet& pkt, Rng& rng, SimTime now);

// ---------------------------------------------------------------------------
// Priority-overflow AQM

struct AnAqmConfig {
  /// Ports that may absorb overflow from a full high-priority port, in
  /// tie-break order by port number.
  std::vector<PortId> low_priority_ports = {1, 2, 3, 4};
};

/// High-priority packets (PRIV, EF) fill their port up to full capacity and
/// are redirected to the least-occupied low-priority port with room once it
/// is full. Low-priority packets are accepted below the soft threshold;
/// at or above it the port stops admitting and packets wait in the
/// deferred list, which drops at its tail when full.
EnqueueVerdict anaqm_enqueue(std::span<EgressQueue> ports, Packet& pkt, PortId target,
                             SimTime now, const AnAqmConfig& cfg);

/// Moves deferred packets into the queue while occupancy is below the soft
/// threshold. Admission resumes once the deferred list is empty and the
/// queue is below threshold.
std::size_t drain_deferred(EgressQueue& q,
                           const std::function<void(const Packet&)>& on_promote = {});

// ---------------------------------------------------------------------------
// Policy objects used by the simulator

enum class PolicyKind : std::uint8_t { DropTail, Red, AnAqm };

std::string_view to_string(PolicyKind k);
std::optional<PolicyKind> parse_policy_kind(std::string_view s);

class AqmPolicy {
 public:
  virtual ~AqmPolicy() = default;
  virtual PolicyKind kind() const = 0;

  /// Decides and applies: on Accept/Redirect/Defer the packet has been moved
  /// into a queue; on Drop its fate is set and it remains with the caller.
  virtual EnqueueVerdict enqueue(std::span<EgressQueue> ports, Packet& pkt, PortId target,
                                 SimTime now) = 0;

  /// Called after a transmission on `port` completed and released its elements.
  virtual void on_departure(std::span<EgressQueue> /*ports*/, PortId /*port*/, SimTime /*now*/) {}
};

class DropTailPolicy final : public AqmPolicy {
 public:
  PolicyKind kind() const override { return PolicyKind::DropTail; }
  EnqueueVerdict enqueue(std::span<EgressQueue> ports, Packet& pkt, PortId target,
                         SimTime now) override;
};

class RedPolicy final : public AqmPolicy {
 public:
  RedPolicy(const RedParams& params, std::span<const EgressQueue> ports,
            std::span<const std::uint64_t> port_rates_bps, std::uint64_t seed);

  PolicyKind kind() const override { return PolicyKind::Red; }
  EnqueueVerdict enqueue(std::span<EgressQueue> ports, Packet& pkt, PortId target,
                         SimTime now) override;
  void on_departure(std::span<EgressQueue> ports, PortId port, SimTime now) override;

  const RedState& state(PortId port) const { return states_.at(port); }

 private:
  std::vector<RedState> states_;
  std::vector<SimTime> typical_tx_;
  Rng rng_;
};

class AnAqmPolicy final : public AqmPolicy {
 public:
  explicit AnAqmPolicy(AnAqmConfig cfg) : cfg_(std::move(cfg)) {}

  PolicyKind kind() const override { return PolicyKind::AnAqm; }
  EnqueueVerdict enqueue(std::span<EgressQueue> ports, Packet& pkt, PortId target,
                         SimTime now) override;

 private:
  AnAqmConfig cfg_;
};

}  // namespace npsim
