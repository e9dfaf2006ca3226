#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "npsim/model.hpp"

namespace npsim {

struct SetFlowPriority {
  FlowKey target;
  TrafficClass level = TrafficClass::PRIV;
  bool operator==(const SetFlowPriority&) const = default;
};

struct SetPortThreshold {
  PortId port = 0;
  double fraction = 0.85;
  bool operator==(const SetPortThreshold&) const = default;
};

struct Trace {
  bool operator==(const Trace&) const = default;
};

/// The closed set of directives an active node executes. Anything else in a
/// capsule is treated as plain data.
using CapsuleDirective = std::variant<SetFlowPriority, SetPortThreshold, Trace>;

/// Parses one directive line:
///   CAPSULE SET_FLOW_PRIORITY <src> <dst> <sport> <dport> <TCP|UDP|RTP_UDP> <PRIV|EF|AF|BE>
///   CAPSULE SET_PORT_THRESHOLD <port> <fraction>
///   CAPSULE TRACE
/// Addresses are dotted quads. Returns nullopt for anything malformed,
/// including an unknown kind or a fraction outside (0, 1].
std::optional<CapsuleDirective> parse_capsule(std::string_view wire);

std::string format_capsule(const CapsuleDirective& d);

std::optional<std::uint32_t> parse_ipv4(std::string_view s);
std::string format_ipv4(std::uint32_t addr);

}  // namespace npsim
