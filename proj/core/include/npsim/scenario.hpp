#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "npsim/simulation.hpp"

namespace npsim {

/// A scenario file: one traffic/pipeline/port setup and the policies to run
/// against it. Every policy sees the same arrival stream.
struct Scenario {
  std::string name = "scenario";
  SimulationConfig sim;
  std::vector<PolicyKind> policies = {PolicyKind::AnAqm};

  /// The simulation configuration for one of the listed policies.
  SimulationConfig config_for(PolicyKind policy) const;

  bool operator==(const Scenario& other) const;
};

/// Parses the key/value scenario grammar (see README). Throws ConfigError
/// naming the key on any unknown key, duplicate, malformed or out-of-range value.
Scenario parse_scenario(std::string_view text);
Scenario load_scenario(const std::filesystem::path& path);

/// Canonical text form; parse_scenario(serialize_scenario(s)) == s.
std::string serialize_scenario(const Scenario& s);

/// FNV-1a of the canonical text, recorded in run metadata.
std::uint64_t scenario_hash(const Scenario& s);

// Value syntaxes shared with the CLI.
SimTime parse_duration(std::string_view text, std::string_view key);
std::uint64_t parse_rate(std::string_view text, std::string_view key);

}  // namespace npsim
