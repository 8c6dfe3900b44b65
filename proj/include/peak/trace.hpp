#pragma once

// Trace files: a header line followed by one time-ordered event per line.
//
//   peak-trace version=1 nodes=n0 sockets=1 domains=pkg,dram
//       wrap_pkg=262143.300000 wrap_dram=65713.000000 tick=2.000000
//       cpu_tick=0.000001                              (one line)
//   idle node=n0 start=0.000000 end=30.000000
//   rapl t=0.000000 node=n0 socket=0 domain=pkg energy=1200.000000
//   proc t=30.000000 node=n0 pid=42 cpu=1500,0 rss=1048576,0 cgroup=/kubepods/...
//   pod t=30.000000 uid=... name=nf-... task=FASTQC node=n0
//   podgone t=50.000000 uid=...
//   segment t=130.000000 label=load
//
// Times and energies are decimals with at most six fractional digits
// (microseconds, microjoules). `cpu` lists cumulative CPU clock ticks per
// socket, `rss` resident bytes per socket.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "peak/common.hpp"
#include "peak/tagged_line.hpp"

namespace peak {

inline constexpr std::string_view kTraceTag = "peak-trace";
inline constexpr int kTraceVersion = 1;

struct TraceHeader {
  int version = kTraceVersion;
  std::vector<std::string> nodes;
  unsigned sockets = 1;
  std::vector<Domain> domains;
  std::map<Domain, std::uint64_t> wrap_uj;
  Timestamp tick{2'000'000};
  double cpu_tick_seconds = 0.01;

  bool has_domain(Domain domain) const;
  std::uint64_t wrap_for(Domain domain) const;

  bool operator==(const TraceHeader&) const = default;
};

struct RaplReading {
  Timestamp t{};
  std::string node;
  unsigned socket = 0;
  Domain domain = Domain::CpuPackage;
  std::uint64_t energy_uj = 0;

  bool operator==(const RaplReading&) const = default;
};

struct ProcRecord {
  Timestamp t{};
  std::string node;
  Pid pid = 0;
  std::vector<std::uint64_t> cpu_ticks;
  std::vector<std::uint64_t> rss_bytes;
  std::string cgroup;

  bool operator==(const ProcRecord&) const = default;
};

struct PodSeen {
  Timestamp t{};
  std::string uid;
  std::string name;
  std::string task;
  std::string node;

  bool operator==(const PodSeen&) const = default;
};

struct PodGone {
  Timestamp t{};
  std::string uid;

  bool operator==(const PodGone&) const = default;
};

struct IdleMark {
  Timestamp start{};
  Timestamp end{};
  std::string node;

  bool operator==(const IdleMark&) const = default;
};

struct SegmentMark {
  Timestamp t{};
  std::string label;

  bool operator==(const SegmentMark&) const = default;
};

using TraceEvent =
    std::variant<RaplReading, ProcRecord, PodSeen, PodGone, IdleMark, SegmentMark>;

Timestamp event_time(const TraceEvent& event);

struct Trace {
  TraceHeader header;
  std::vector<TraceEvent> events;

  bool operator==(const Trace&) const = default;
};

// Throws TaggedLineError carrying the offending line number.
Trace parse_trace(std::istream& in);
Trace parse_trace(std::string_view text);
Trace read_trace_file(const std::filesystem::path& path);

void write_trace(std::ostream& out, const Trace& trace);
std::string format_trace(const Trace& trace);
void write_trace_file(const std::filesystem::path& path, const Trace& trace);

}  // namespace peak
