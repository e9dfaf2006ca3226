#include "npsim/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "npsim/capsule.hpp"
#include "npsim/errors.hpp"

namespace npsim {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  for (;;) {
    const auto next = s.find(sep, pos);
    out.push_back(trim(s.substr(pos, next - pos)));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

[[noreturn]] void bad(std::string_view key, std::string_view what) {
  throw ConfigError(std::string(key) + ": " + std::string(what));
}

template <typename T>
T parse_uint(std::string_view text, std::string_view key) {
  std::uint64_t v = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (text.empty() || ec != std::errc{} || ptr != end) bad(key, "expected an unsigned integer");
  if (v > std::numeric_limits<T>::max()) {
    bad(key, "must be at most " + std::to_string(std::numeric_limits<T>::max()));
  }
  return static_cast<T>(v);
}

double parse_double(std::string_view text, std::string_view key) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (text.empty() || ec != std::errc{} || ptr != end) bad(key, "expected a number");
  return v;
}

// Number followed by an optional unit from `units` (name, multiplier).
std::uint64_t parse_with_unit(std::string_view text, std::string_view key,
                              std::initializer_list<std::pair<std::string_view, std::uint64_t>> units,
                              std::string_view expected) {
  text = trim(text);
  std::size_t digits = 0;
  while (digits < text.size() && text[digits] >= '0' && text[digits] <= '9') ++digits;
  if (digits == 0) bad(key, expected);
  const auto value = parse_uint<std::uint64_t>(text.substr(0, digits), key);
  const auto unit = trim(text.substr(digits));
  if (unit.empty()) return value;
  for (const auto& [name, mult] : units) {
    if (unit == name) {
      if (value > std::numeric_limits<std::uint64_t>::max() / mult) bad(key, "value too large");
      return value * mult;
    }
  }
  bad(key, expected);
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string join_ports(const std::vector<PortId>& ports) {
  std::string out;
  for (std::size_t i = 0; i < ports.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(ports[i]);
  }
  return out;
}

std::vector<PortId> parse_port_list(std::string_view text, std::string_view key) {
  std::vector<PortId> out;
  for (auto item : split(text, ',')) out.push_back(parse_uint<PortId>(item, key));
  return out;
}

std::vector<KindWeight> parse_mix(std::string_view text, std::string_view key) {
  std::vector<KindWeight> out;
  for (auto item : split(text, ',')) {
    const auto colon = item.find(':');
    const auto kind = parse_packet_kind(trim(item.substr(0, colon)));
    if (!kind) bad(key, "unknown packet kind '" + std::string(item.substr(0, colon)) + "'");
    double w = 1.0;
    if (colon != std::string_view::npos) w = parse_double(trim(item.substr(colon + 1)), key);
    out.push_back({*kind, w});
  }
  return out;
}

SizeModel parse_size(std::string_view text, std::string_view key) {
  const auto dash = text.find('-');
  if (dash == std::string_view::npos) return FixedSize{parse_uint<std::uint32_t>(text, key)};
  return UniformSize{parse_uint<std::uint32_t>(trim(text.substr(0, dash)), key),
                     parse_uint<std::uint32_t>(trim(text.substr(dash + 1)), key)};
}

std::string ns_text(SimTime t) { return std::to_string(t.ns) + "ns"; }

struct Parser {
  Scenario sc;
  std::set<std::string> seen;
  std::vector<std::uint64_t> rates;

  void set(std::string_view section, std::string_view key, std::string_view value) {
    const std::string full =
        section.empty() ? std::string(key) : std::string(section) + "." + std::string(key);
    const bool repeatable = full == "capsules.capsule";
    if (!repeatable && !seen.insert(full).second) bad(full, "duplicate key");
    if (value.empty()) bad(full, "missing value");

    auto& t = sc.sim.traffic;
    auto& pl = sc.sim.pipeline;
    auto& po = sc.sim.ports;
    auto& cl = sc.sim.classifier;
    auto& red = sc.sim.red;

    if (section.empty()) {
      if (key == "name") {
        sc.name = std::string(value);
      } else if (key == "seed") {
        t.seed = parse_uint<std::uint64_t>(value, full);
      } else if (key == "duration") {
        t.duration = parse_duration(value, full);
      } else if (key == "policy") {
        sc.policies.clear();
        for (auto item : split(value, ',')) {
          const auto k = parse_policy_kind(item);
          if (!k) bad(full, "unknown policy '" + std::string(item) + "' (droptail, red, anaqm)");
          if (std::find(sc.policies.begin(), sc.policies.end(), *k) != sc.policies.end()) {
            bad(full, "policy listed twice");
          }
          sc.policies.push_back(*k);
        }
      } else if (key == "snapshot_interval") {
        sc.sim.snapshot_interval = parse_duration(value, full);
      } else {
        bad(full, "unknown key");
      }
    } else if (section == "traffic") {
      if (key == "rate") t.aggregate_rate_bps = parse_rate(value, full);
      else if (key == "gap") t.inter_packet_gap = parse_duration(value, full);
      else if (key == "flows") t.flow_count = parse_uint<std::uint32_t>(value, full);
      else if (key == "start_window") t.start_window = parse_duration(value, full);
      else if (key == "mix") t.mix = parse_mix(value, full);
      else if (key == "size") t.size_model = parse_size(value, full);
      else bad(full, "unknown key");
    } else if (section == "pipeline") {
      if (key == "rx_service_per_mpacket") pl.rx_service_per_mpacket = parse_duration(value, full);
      else if (key == "rbuf_bytes") pl.rbuf_bytes = parse_uint<std::uint32_t>(value, full);
      else if (key == "ring_capacity") pl.ring_capacity = parse_uint<std::uint32_t>(value, full);
      else if (key == "classify_service") pl.classify_service = parse_duration(value, full);
      else bad(full, "unknown key");
    } else if (section == "ports") {
      if (key == "count") {
        po.count = parse_uint<std::uint32_t>(value, full);
      } else if (key == "rate") {
        for (auto item : split(value, ',')) rates.push_back(parse_rate(item, full));
      } else if (key == "tbuf_bytes") {
        po.tbuf_bytes = parse_uint<std::uint32_t>(value, full);
      } else if (key == "soft_threshold") {
        po.soft_threshold = parse_double(value, full);
      } else if (key == "deferred_capacity") {
        po.deferred_capacity = parse_uint<std::uint32_t>(value, full);
      } else if (key == "feedback_every") {
        po.feedback_every = parse_uint<std::uint32_t>(value, full);
      } else {
        bad(full, "unknown key");
      }
    } else if (section == "classifier") {
      if (key == "refresh_interval") {
        cl.refresh_interval = parse_duration(value, full);
      } else if (key == "table_max") {
        cl.table_max = parse_uint<std::uint32_t>(value, full);
      } else if (key == "node_id") {
        cl.node_id = parse_uint<std::uint32_t>(value, full);
      } else if (key.starts_with("route_")) {
        const auto cls = parse_traffic_class(key.substr(6));
        if (!cls) bad(full, "unknown key");
        cl.routing.class_to_port[index_of(*cls)] = parse_port_list(value, full);
      } else {
        bad(full, "unknown key");
      }
    } else if (section == "red") {
      if (key == "w_q") red.w_q = parse_double(value, full);
      else if (key == "min_th") red.min_th = parse_double(value, full);
      else if (key == "max_th") red.max_th = parse_double(value, full);
      else if (key == "max_p") red.max_p = parse_double(value, full);
      else bad(full, "unknown key");
    } else if (section == "capsules") {
      if (key != "capsule") bad(full, "unknown key");
      const auto space = value.find(' ');
      if (space == std::string_view::npos) bad(full, "expected '<time> CAPSULE ...'");
      const SimTime at = parse_duration(value.substr(0, space), full);
      // Kept verbatim: a malformed directive is a valid test of the capsule
      // parser, which ignores and counts it.
      t.capsules.push_back({at, std::string(trim(value.substr(space + 1)))});
    } else {
      bad(section, "unknown section");
    }
  }

  void finish() {
    auto& po = sc.sim.ports;
    if (rates.size() == 1) {
      po.rate_bps.assign(po.count, rates.front());
    } else if (!rates.empty()) {
      po.rate_bps = rates;
    } else {
      po.rate_bps.resize(po.count, po.rate_bps.empty() ? kDefaultPortRateBps : po.rate_bps.front());
    }
    if (sc.policies.empty()) bad("policy", "at least one policy required");
    validate_config(sc.sim);
  }
};

}  // namespace

SimTime parse_duration(std::string_view text, std::string_view key) {
  return SimTime{parse_with_unit(text, key,
                                 {{"ns", 1}, {"us", 1'000}, {"ms", 1'000'000}, {"s", 1'000'000'000}},
                                 "expected a duration such as 96ns, 50us, 60ms or 1s")};
}

std::uint64_t parse_rate(std::string_view text, std::string_view key) {
  return parse_with_unit(text, key,
                         {{"bps", 1}, {"kbps", 1'000}, {"Mbps", 1'000'000}, {"Gbps", 1'000'000'000}},
                         "expected a rate such as 155Mbps or 1Gbps");
}

SimulationConfig Scenario::config_for(PolicyKind policy) const {
  SimulationConfig c = sim;
  c.policy = policy;
  return c;
}

bool Scenario::operator==(const Scenario& o) const {
  const auto& a = sim;
  const auto& b = o.sim;
  return name == o.name && policies == o.policies && a.traffic == b.traffic &&
         a.pipeline == b.pipeline && a.ports == b.ports && a.classifier == b.classifier &&
         a.red == b.red && a.snapshot_interval == b.snapshot_interval;
}

Scenario parse_scenario(std::string_view text) {
  Parser p;
  std::string section;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;

    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') bad("line " + std::to_string(line_no), "unterminated section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      bad("line " + std::to_string(line_no), "expected 'key = value'");
    }
    p.set(section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  p.finish();
  return p.sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open scenario file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

std::string serialize_scenario(const Scenario& s) {
  const auto& t = s.sim.traffic;
  const auto& pl = s.sim.pipeline;
  const auto& po = s.sim.ports;
  const auto& cl = s.sim.classifier;
  const auto& red = s.sim.red;

  std::ostringstream out;
  out << "name = " << s.name << '\n';
  out << "seed = " << t.seed << '\n';
  out << "duration = " << ns_text(t.duration) << '\n';
  out << "policy = ";
  for (std::size_t i = 0; i < s.policies.size(); ++i) {
    out << (i ? "," : "") << to_string(s.policies[i]);
  }
  out << '\n';
  if (s.sim.snapshot_interval) out << "snapshot_interval = " << ns_text(*s.sim.snapshot_interval) << '\n';

  out << "\n[traffic]\n";
  out << "rate = " << t.aggregate_rate_bps << "bps\n";
  out << "gap = " << ns_text(t.inter_packet_gap) << '\n';
  out << "flows = " << t.flow_count << '\n';
  out << "start_window = " << ns_text(t.start_window) << '\n';
  out << "mix = ";
  for (std::size_t i = 0; i < t.mix.size(); ++i) {
    out << (i ? "," : "") << to_string(t.mix[i].kind) << ':' << format_double(t.mix[i].weight);
  }
  out << '\n';
  if (const auto* f = std::get_if<FixedSize>(&t.size_model)) {
    out << "size = " << f->bytes << '\n';
  } else {
    const auto& u = std::get<UniformSize>(t.size_model);
    out << "size = " << u.lo << '-' << u.hi << '\n';
  }

  out << "\n[pipeline]\n";
  out << "rx_service_per_mpacket = " << ns_text(pl.rx_service_per_mpacket) << '\n';
  out << "rbuf_bytes = " << pl.rbuf_bytes << '\n';
  out << "ring_capacity = " << pl.ring_capacity << '\n';
  out << "classify_service = " << ns_text(pl.classify_service) << '\n';

  out << "\n[ports]\n";
  out << "count = " << po.count << '\n';
  out << "rate = ";
  for (std::size_t i = 0; i < po.rate_bps.size(); ++i) out << (i ? "," : "") << po.rate_bps[i] << "bps";
  out << '\n';
  out << "tbuf_bytes = " << po.tbuf_bytes << '\n';
  out << "soft_threshold = " << format_double(po.soft_threshold) << '\n';
  out << "deferred_capacity = " << po.deferred_capacity << '\n';
  out << "feedback_every = " << po.feedback_every << '\n';

  out << "\n[classifier]\n";
  out << "refresh_interval = " << ns_text(cl.refresh_interval) << '\n';
  out << "table_max = " << cl.table_max << '\n';
  out << "node_id = " << cl.node_id << '\n';
  for (auto c : {TrafficClass::PRIV, TrafficClass::EF, TrafficClass::AF, TrafficClass::BE}) {
    out << "route_" << to_string(c) << " = " << join_ports(cl.routing.ports_for(c)) << '\n';
  }

  out << "\n[red]\n";
  out << "w_q = " << format_double(red.w_q) << '\n';
  if (red.min_th) out << "min_th = " << format_double(*red.min_th) << '\n';
  if (red.max_th) out << "max_th = " << format_double(*red.max_th) << '\n';
  out << "max_p = " << format_double(red.max_p) << '\n';

  if (!t.capsules.empty()) {
    out << "\n[capsules]\n";
    for (const auto& c : t.capsules) out << "capsule = " << ns_text(c.at) << ' ' << c.wire << '\n';
  }
  return out.str();
}

std::uint64_t scenario_hash(const Scenario& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : serialize_scenario(s)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace npsim
