#include "peak/common.hpp"

#include <cmath>

#include <fmt/format.h>

namespace peak {

Timestamp seconds_to_timestamp(double seconds) {
  return Timestamp{std::llround(seconds * 1e6)};
}

std::string_view to_string(Domain domain) {
  switch (domain) {
    case Domain::CpuPackage:
      return "pkg";
    case Domain::Dram:
      return "dram";
  }
  return "?";
}

Domain parse_domain(std::string_view text) {
  if (text == "pkg" || text == "package") return Domain::CpuPackage;
  if (text == "dram") return Domain::Dram;
  throw DomainError(fmt::format("unknown domain '{}'", text));
}

std::string describe(const LedgerKey& key) {
  return fmt::format("{}/socket{}/{}", key.socket.node, key.socket.socket,
                     to_string(key.domain));
}

}  // namespace peak
