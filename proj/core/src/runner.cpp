#include "npsim/runner.hpp"

#include <fstream>
#include <future>

#include "npsim/errors.hpp"

namespace npsim {

RunResult run_policy(const Scenario& s, PolicyKind policy, const RunOptions& opts) {
  SimulationConfig cfg = s.config_for(policy);
  if (opts.snapshot_interval) cfg.snapshot_interval = opts.snapshot_interval;

  Simulation sim(cfg);
  std::ofstream log;
  if (opts.event_log) {
    log.open(*opts.event_log);
    if (!log) throw ConfigError(opts.event_log->string() + ": cannot open event log for writing");
    sim.set_event_log(&log);
  }
  sim.run();

  RunResult r{s.name, policy, sim.metrics(), sim.stats(), sim.classifier().stats(), sim.snapshots()};
  // Hash this run's setup only, so listing order and companions don't matter.
  Scenario single = s;
  single.policies = {policy};
  r.metrics.metadata.config_hash = scenario_hash(single);
  return r;
}

const RunResult* ComparisonReport::find(PolicyKind k) const {
  for (const auto& r : runs) {
    if (r.policy == k) return &r;
  }
  return nullptr;
}

bool anaqm_beats_red(const MetricCounters& anaqm, const MetricCounters& red) {
  const auto a = loss_rate(anaqm, TrafficClass::EF);
  const auto b = loss_rate(red, TrafficClass::EF);
  return a && b && *a < *b;
}

namespace {

std::optional<double> diff(std::optional<double> a, std::optional<double> b) {
  if (!a || !b) return std::nullopt;
  return *a - *b;
}

std::optional<double> mean_delay(const MetricCounters& m, TrafficClass c) {
  const auto d = delay_stats(m, c);
  if (!d) return std::nullopt;
  return d->mean;
}

}  // namespace

ComparisonReport run_comparison(const Scenario& s, const RunOptions& opts,
                                const std::optional<std::filesystem::path>& event_log_dir) {
  std::vector<std::future<RunResult>> futures;
  for (auto policy : s.policies) {
    RunOptions o = opts;
    if (event_log_dir) o.event_log = *event_log_dir / (std::string(to_string(policy)) + ".events.log");
    futures.push_back(std::async(std::launch::async, [&s, policy, o] { return run_policy(s, policy, o); }));
  }

  ComparisonReport report;
  report.scenario = s.name;
  for (std::size_t i = 0; i < futures.size(); ++i) {
    try {
      report.runs.push_back(futures[i].get());
    } catch (const AuditError& e) {
      report.failures.push_back({s.policies[i], e.what()});
    } catch (const SimulationError& e) {
      report.failures.push_back({s.policies[i], e.what()});
    }
  }
  if (report.runs.empty()) return report;

  for (const auto& r : report.runs) {
    if (r.metrics.metadata.arrival_hash != report.runs.front().metrics.metadata.arrival_hash) {
      report.arrival_streams_match = false;
    }
  }

  const RunResult* base = report.find(PolicyKind::Red);
  if (!base) base = &report.runs.front();
  for (const auto& r : report.runs) {
    if (&r == base) continue;
    PolicyDelta d{r.policy, base->policy, {}};
    for (auto c : kAllClasses) {
      d.classes.push_back({c, diff(loss_rate(r.metrics, c), loss_rate(base->metrics, c)),
                           diff(mean_delay(r.metrics, c), mean_delay(base->metrics, c))});
    }
    report.deltas.push_back(std::move(d));
  }

  const auto* a = report.find(PolicyKind::AnAqm);
  const auto* red = report.find(PolicyKind::Red);
  if (a && red) report.anaqm_beats_red = anaqm_beats_red(a->metrics, red->metrics);
  return report;
}

}  // namespace npsim
