#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace peak {

// Monotonic time with microsecond resolution. Replay uses the trace's own
// timeline; live mode counts from monitor start.
using Timestamp = std::chrono::microseconds;
using Pid = std::int64_t;

inline double to_seconds(Timestamp t) {
  return std::chrono::duration<double>(t).count();
}

Timestamp seconds_to_timestamp(double seconds);

// Base of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidIntervalError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

enum class Domain : std::uint8_t { CpuPackage, Dram };

inline constexpr Domain kAllDomains[] = {Domain::CpuPackage, Domain::Dram};

// "pkg" / "dram", as used in every file format.
std::string_view to_string(Domain domain);
Domain parse_domain(std::string_view text);

struct SocketId {
  std::string node;
  unsigned socket = 0;

  auto operator<=>(const SocketId&) const = default;
  bool operator==(const SocketId&) const = default;
};

struct LedgerKey {
  SocketId socket;
  Domain domain = Domain::CpuPackage;

  auto operator<=>(const LedgerKey&) const = default;
  bool operator==(const LedgerKey&) const = default;
};

std::string describe(const LedgerKey& key);

}  // namespace peak
