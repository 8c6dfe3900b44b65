#include "peak/powercap.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <optional>
#include <sstream>

#include <fmt/format.h>

#include "peak/procfs.hpp"

namespace peak {

namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("cannot read {}", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == ' ' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  return s;
}

// "intel-rapl:0" -> {0}, "intel-rapl:0:1" -> {0, 1}.
std::optional<std::vector<unsigned>> zone_indices(std::string_view name) {
  constexpr std::string_view kPrefix = "intel-rapl:";
  if (!name.starts_with(kPrefix)) return std::nullopt;
  name.remove_prefix(kPrefix.size());
  std::vector<unsigned> out;
  while (!name.empty()) {
    const auto colon = name.find(':');
    const std::string_view part = name.substr(0, colon);
    unsigned value = 0;
    auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), value);
    if (ec != std::errc{} || ptr != part.data() + part.size()) return std::nullopt;
    out.push_back(value);
    if (colon == std::string_view::npos) break;
    name.remove_prefix(colon + 1);
  }
  return out;
}

}  // namespace

std::uint64_t parse_microjoules(std::string_view text) {
  const std::string_view body = trim(text);
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), value);
  if (ec != std::errc{} || ptr != body.data() + body.size() || body.empty()) {
    throw ParseError(fmt::format("bad microjoule value '{}'", body));
  }
  return value;
}

std::vector<PowercapZone> discover_powercap_zones(const fs::path& root) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) {
    throw Error(fmt::format("powercap root {} is not readable", root.string()));
  }
  std::vector<PowercapZone> zones;
  // Subzones show up flat at the root on sysfs and nested under their
  // package in some fixtures; look in both places.
  std::vector<fs::path> candidates;
  for (const auto& entry : fs::directory_iterator(root)) {
    candidates.push_back(entry.path());
    if (zone_indices(entry.path().filename().string()) && fs::is_directory(entry.path())) {
      for (const auto& sub : fs::directory_iterator(entry.path())) {
        candidates.push_back(sub.path());
      }
    }
  }
  for (const fs::path& dir : candidates) {
    const auto indices = zone_indices(dir.filename().string());
    if (!indices || indices->size() > 2 || !fs::exists(dir / "energy_uj")) continue;
    const std::string name =
        fs::exists(dir / "name") ? std::string(trim(read_file(dir / "name"))) : "";
    PowercapZone zone{dir, indices->front(), Domain::CpuPackage};
    if (indices->size() == 2) {
      if (name != "dram") continue;
      zone.domain = Domain::Dram;
    } else if (name.starts_with("package-")) {
      unsigned id = 0;
      const std::string_view digits = std::string_view(name).substr(8);
      auto [ptr, err] = std::from_chars(digits.data(), digits.data() + digits.size(), id);
      if (err == std::errc{}) zone.socket = id;
    }
    const bool duplicate = std::any_of(zones.begin(), zones.end(), [&](const PowercapZone& z) {
      return z.socket == zone.socket && z.domain == zone.domain;
    });
    if (!duplicate) zones.push_back(zone);
  }
  std::sort(zones.begin(), zones.end(), [](const PowercapZone& a, const PowercapZone& b) {
    return std::tie(a.socket, a.domain) < std::tie(b.socket, b.domain);
  });
  return zones;
}

CounterSample read_powercap_zone(const PowercapZone& zone,
                                 const std::string& node, Timestamp at) {
  CounterSample s;
  s.timestamp = at;
  s.socket = SocketId{node, zone.socket};
  s.domain = zone.domain;
  s.cumulative_uj = parse_microjoules(read_file(zone.dir / "energy_uj"));
  const fs::path range = zone.dir / "max_energy_range_uj";
  s.wrap_uj = fs::exists(range) ? parse_microjoules(read_file(range))
                                : default_wrap_microjoules(zone.domain);
  // max_energy_range_uj is the largest readable value; the counter folds
  // one microjoule later.
  if (fs::exists(range)) s.wrap_uj += 1;
  return s;
}

}  // namespace peak
