#pragma once

#include <string>

#include "npsim/runner.hpp"

namespace npsim {

/// JSON summary of one run: metadata, packet totals, per-class loss and
/// delay, per-port throughput. Keys are sorted, so equal runs give equal bytes.
std::string summary_json(const RunResult& r);

/// One CSV row per (class, port, fate) counter: `class,port,fate,packets,bytes`.
std::string counters_csv(const MetricCounters& m);

std::string comparison_json(const ComparisonReport& c);

/// Plain-text rendering of a status snapshot.
std::string format_status(const StatusSnapshot& s);

}  // namespace npsim
