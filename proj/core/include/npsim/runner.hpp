#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "npsim/scenario.hpp"

namespace npsim {

struct RunOptions {
  std::optional<SimTime> snapshot_interval;
  /// When set, the lifecycle event log is written to this file.
  std::optional<std::filesystem::path> event_log;
};

struct RunResult {
  std::string scenario;
  PolicyKind policy = PolicyKind::AnAqm;
  MetricCounters metrics;
  PipelineStats pipeline;
  ClassifierStats classifier;
  std::vector<StatusSnapshot> snapshots;
};

/// Builds and runs one simulation; audit failures propagate as AuditError.
RunResult run_policy(const Scenario& s, PolicyKind policy, const RunOptions& opts = {});

struct ClassDelta {
  TrafficClass traffic_class = TrafficClass::BE;
  std::optional<double> loss_delta;        // policy minus baseline
  std::optional<double> mean_delay_delta;  // ns, policy minus baseline
};

struct PolicyDelta {
  PolicyKind policy = PolicyKind::AnAqm;
  PolicyKind baseline = PolicyKind::Red;
  std::vector<ClassDelta> classes;
};

struct RunFailure {
  PolicyKind policy = PolicyKind::AnAqm;
  std::string message;
};

struct ComparisonReport {
  std::string scenario;
  std::vector<RunResult> runs;  // in scenario order, failed runs omitted
  std::vector<RunFailure> failures;
  /// Deltas of every other policy against the baseline (red when listed,
  /// otherwise the first policy).
  std::vector<PolicyDelta> deltas;
  /// Present when both anaqm and red ran: EF loss(anaqm) < EF loss(red).
  std::optional<bool> anaqm_beats_red;
  bool arrival_streams_match = true;

  const RunResult* find(PolicyKind k) const;
};

/// Runs each listed policy on the identical arrival stream, in parallel.
/// Audit failures are collected per run instead of aborting the others.
ComparisonReport run_comparison(const Scenario& s, const RunOptions& opts = {},
                                const std::optional<std::filesystem::path>& event_log_dir = std::nullopt);

/// The acceptance predicate on two finished runs.
bool anaqm_beats_red(const MetricCounters& anaqm, const MetricCounters& red);

}  // namespace npsim
