#pragma once

// Read-only access to the powercap RAPL tree:
//   <root>/intel-rapl:<s>/energy_uj            package counter
//   <root>/intel-rapl:<s>:<d>/energy_uj        subzone; "dram" when name says so
//   .../max_energy_range_uj                    wrap constant

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "peak/common.hpp"
#include "peak/counters.hpp"

namespace peak {

inline constexpr std::string_view kDefaultPowercapRoot = "/sys/class/powercap";

struct PowercapZone {
  std::filesystem::path dir;
  unsigned socket = 0;
  Domain domain = Domain::CpuPackage;
};

// Integer microjoules from an energy_uj / max_energy_range_uj file body.
std::uint64_t parse_microjoules(std::string_view text);

// Package and DRAM zones, sorted by (socket, domain). Other subzones (core,
// uncore, psys) are skipped.
std::vector<PowercapZone> discover_powercap_zones(
    const std::filesystem::path& root);

CounterSample read_powercap_zone(const PowercapZone& zone,
                                 const std::string& node, Timestamp at);

}  // namespace peak
