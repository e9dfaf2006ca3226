// npsim: run scenario files through the pipeline simulator.
//
//   npsim run <scenario>      run every policy listed in the scenario
//   npsim compare <scenario>  run them side by side and check the predicate
//
// Exit status: 0 ok, 1 configuration error, 2 internal audit failure,
// 3 anaqm did not beat red.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "npsim/errors.hpp"
#include "npsim/report.hpp"
#include "npsim/runner.hpp"

namespace fs = std::filesystem;
using namespace npsim;

namespace {

enum Exit { kOk = 0, kConfig = 1, kAudit = 2, kPredicate = 3 };

struct Options {
  std::string scenario;
  std::optional<unsigned> snapshot_ms;
  bool event_log = false;
  std::string out = "npsim-out";
};

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError(path.string() + ": cannot open for writing");
  f << text;
}

void write_run(const fs::path& dir, const RunResult& r) {
  const std::string stem(to_string(r.policy));
  write_file(dir / (stem + ".summary.json"), summary_json(r));
  write_file(dir / (stem + ".counters.csv"), counters_csv(r.metrics));
}

void print_run(const RunResult& r) {
  const auto& m = r.metrics;
  std::cout << to_string(r.policy) << ": generated " << m.generated() << ", transmitted "
            << m.transmitted() << ", dropped " << m.dropped() << ", resident " << m.resident() << '\n';
  for (auto c : {TrafficClass::PRIV, TrafficClass::EF, TrafficClass::AF, TrafficClass::BE}) {
    const auto loss = loss_rate(m, c);
    const auto delay = delay_stats(m, c);
    if (!loss && !delay) continue;
    std::cout << "  " << to_string(c) << "  loss " << (loss ? std::to_string(*loss) : "-")
              << "  mean delay " << (delay ? std::to_string(delay->mean / 1e3) + " us" : "-") << '\n';
  }
  for (const auto& s : r.snapshots) std::cout << format_status(s);
}

RunOptions run_options(const Options& o) {
  RunOptions ro;
  if (o.snapshot_ms) ro.snapshot_interval = SimTime::from_ms(*o.snapshot_ms);
  return ro;
}

int cmd_run(const Options& o) {
  const Scenario s = load_scenario(o.scenario);
  const fs::path dir(o.out);
  fs::create_directories(dir);
  for (auto policy : s.policies) {
    RunOptions ro = run_options(o);
    if (o.event_log) ro.event_log = dir / (std::string(to_string(policy)) + ".events.log");
    const RunResult r = run_policy(s, policy, ro);
    write_run(dir, r);
    print_run(r);
  }
  return kOk;
}

int cmd_compare(const Options& o) {
  const Scenario s = load_scenario(o.scenario);
  if (s.policies.size() < 2) throw ConfigError("policy: compare needs at least two policies");
  const fs::path dir(o.out);
  fs::create_directories(dir);
  std::optional<fs::path> log_dir;
  if (o.event_log) log_dir = dir;

  const ComparisonReport c = run_comparison(s, run_options(o), log_dir);
  for (const auto& r : c.runs) {
    write_run(dir, r);
    print_run(r);
  }
  write_file(dir / "comparison.json", comparison_json(c));

  for (const auto& f : c.failures) {
    std::cerr << "npsim: " << to_string(f.policy) << " run failed: " << f.message << '\n';
  }
  if (!c.failures.empty() || !c.arrival_streams_match) return kAudit;
  if (c.anaqm_beats_red) {
    std::cout << "anaqm beats red on EF loss: " << (*c.anaqm_beats_red ? "yes" : "no") << '\n';
    if (!*c.anaqm_beats_red) return kPredicate;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Network-processor pipeline simulator with pluggable queue management"};
  app.require_subcommand(1);

  Options opts;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("scenario", opts.scenario, "Scenario file")->required()->check(CLI::ExistingFile);
    sub->add_option("--snapshot-interval", opts.snapshot_ms, "Print a status table every N ms");
    sub->add_flag("--event-log", opts.event_log, "Write the lifecycle event log per policy");
    sub->add_option("--out", opts.out, "Output directory")->capture_default_str();
  };
  auto* run = app.add_subcommand("run", "Run every policy in the scenario");
  auto* compare = app.add_subcommand("compare", "Compare policies on the identical arrival stream");
  add_common(run);
  add_common(compare);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    return run->parsed() ? cmd_run(opts) : cmd_compare(opts);
  } catch (const ConfigError& e) {
    std::cerr << "npsim: configuration error: " << e.what() << '\n';
    return kConfig;
  } catch (const AuditError& e) {
    std::cerr << "npsim: audit failure: " << e.what() << '\n';
    return kAudit;
  } catch (const SimulationError& e) {
    std::cerr << "npsim: internal error: " << e.what() << '\n';
    return kAudit;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "npsim: " << e.what() << '\n';
    return kConfig;
  }
}
