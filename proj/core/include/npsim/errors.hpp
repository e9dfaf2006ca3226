#pragma once

#include <stdexcept>
#include <string>

namespace npsim {

/// Invalid scenario or component configuration. Messages name the offending
/// field, e.g. "red.max_p: must be in (0, 1]".
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A simulator invariant was broken by the code itself: an event scheduled
/// in the past, a transmit on a busy link, a second terminal fate.
class SimulationError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// An end-of-run or snapshot audit (conservation, duplicate terminal event)
/// did not hold.
class AuditError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MalformedPacket : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ReassemblyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace npsim
