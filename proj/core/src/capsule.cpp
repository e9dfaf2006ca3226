#include "npsim/capsule.hpp"

#include <charconv>
#include <sstream>
#include <vector>

namespace npsim {

namespace {

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

template <typename T>
std::optional<T> parse_uint(std::string_view s) {
  T v{};
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || ptr != end) return std::nullopt;
  return v;
}

std::optional<double> parse_double(std::string_view s) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || ptr != end) return std::nullopt;
  return v;
}

}  // namespace

std::optional<std::uint32_t> parse_ipv4(std::string_view s) {
  std::uint32_t addr = 0;
  int parts = 0;
  std::size_t pos = 0;
  while (parts < 4) {
    const std::size_t dot = s.find('.', pos);
    const std::string_view part =
        s.substr(pos, dot == std::string_view::npos ? std::string_view::npos : dot - pos);
    const auto octet = parse_uint<std::uint32_t>(part);
    if (!octet || *octet > 255) return std::nullopt;
    addr = (addr << 8) | *octet;
    ++parts;
    if (dot == std::string_view::npos) break;
    pos = dot + 1;
  }
  if (parts != 4) return std::nullopt;
  return addr;
}

std::string format_ipv4(std::uint32_t addr) {
  return std::to_string(addr >> 24) + "." + std::to_string((addr >> 16) & 0xFF) + "." +
         std::to_string((addr >> 8) & 0xFF) + "." + std::to_string(addr & 0xFF);
}

std::optional<CapsuleDirective> parse_capsule(std::string_view wire) {
  const auto tok = split_ws(wire);
  if (tok.size() < 2 || tok[0] != "CAPSULE") return std::nullopt;

  if (tok[1] == "TRACE") {
    if (tok.size() != 2) return std::nullopt;
    return Trace{};
  }
  if (tok[1] == "SET_PORT_THRESHOLD") {
    if (tok.size() != 4) return std::nullopt;
    const auto port = parse_uint<std::uint32_t>(tok[2]);
    const auto fraction = parse_double(tok[3]);
    if (!port || *port >= kEgressPorts || !fraction) return std::nullopt;
    if (!(*fraction > 0.0 && *fraction <= 1.0)) return std::nullopt;
    return SetPortThreshold{static_cast<PortId>(*port), *fraction};
  }
  if (tok[1] == "SET_FLOW_PRIORITY") {
    if (tok.size() != 8) return std::nullopt;
    const auto src = parse_ipv4(tok[2]);
    const auto dst = parse_ipv4(tok[3]);
    const auto sport = parse_uint<std::uint16_t>(tok[4]);
    const auto dport = parse_uint<std::uint16_t>(tok[5]);
    const auto proto = parse_protocol(tok[6]);
    const auto level = parse_traffic_class(tok[7]);
    if (!src || !dst || !sport || !dport || !proto || !level) return std::nullopt;
    return SetFlowPriority{FlowKey{*src, *dst, *sport, *dport, *proto}, *level};
  }
  return std::nullopt;
}

std::string format_capsule(const CapsuleDirective& d) {
  struct Formatter {
    std::string operator()(const Trace&) const { return "CAPSULE TRACE"; }
    std::string operator()(const SetPortThreshold& t) const {
      std::ostringstream out;
      out.imbue(std::locale::classic());
      out.precision(17);
      out << "CAPSULE SET_PORT_THRESHOLD " << static_cast<unsigned>(t.port) << ' ' << t.fraction;
      return out.str();
    }
    std::string operator()(const SetFlowPriority& f) const {
      return "CAPSULE SET_FLOW_PRIORITY " + format_ipv4(f.target.src_addr) + " " +
             format_ipv4(f.target.dst_addr) + " " + std::to_string(f.target.src_port) + " " +
             std::to_string(f.target.dst_port) + " " + std::string(to_string(f.target.protocol)) +
             " " + std::string(to_string(f.level));
    }
  };
  return std::visit(Formatter{}, d);
}

}  // namespace npsim
