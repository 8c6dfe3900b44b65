#pragma once

// Per-process CPU time and resident memory: socket apportionment, interval
// shares and pod-to-process discovery through cgroup metadata.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "peak/attribution.hpp"
#include "peak/common.hpp"

namespace peak {

// Logical CPU index -> socket.
struct TopologyMap {
  std::vector<unsigned> socket_of_cpu;
  unsigned sockets = 1;

  unsigned socket_for(unsigned cpu) const;
  static TopologyMap uniform(unsigned cpus, unsigned sockets);
};

// Live samples: the whole interval's CPU time and all resident memory land on
// the socket of the CPU the process last ran on.
struct LastCpuUsage {
  unsigned cpu = 0;
  std::uint64_t cpu_ticks = 0;
  std::uint64_t rss_bytes = 0;
};

// Trace samples carry exact per-socket values.
struct PerSocketUsage {
  std::vector<std::uint64_t> cpu_ticks;
  std::vector<std::uint64_t> rss_bytes;
};

struct ProcessSample {
  Timestamp timestamp{};
  Pid pid = 0;
  std::variant<LastCpuUsage, PerSocketUsage> usage;
  std::string cgroup;

  std::uint64_t total_cpu_ticks() const;
  std::uint64_t total_rss_bytes() const;
};

// One pass over every process on a node.
struct ProcessScan {
  std::string node;
  Timestamp at{};
  double tick_seconds = 0.01;
  std::vector<ProcessSample> processes;
};

// A process's activity over one interval, per socket index.
struct ProcessUsage {
  Pid pid = 0;
  bool first_seen = false;  // absent from the previous scan
  bool restarted = false;   // cumulative CPU time went backwards
  std::map<unsigned, double> cpu_seconds;
  std::map<unsigned, double> rss_bytes;
};

// Deltas between consecutive scans. A process missing from `prev` was born in
// the interval and contributes its full cumulative time; a decrease means the
// pid was reused and the new instance likewise starts from zero.
std::vector<ProcessUsage> interval_usage(const ProcessScan* prev,
                                         const ProcessScan& next,
                                         const TopologyMap& topology);

struct SocketTotals {
  std::map<SocketId, double> cpu_seconds;
  std::map<SocketId, double> rss_bytes;
};

SocketTotals socket_totals(std::span<const ProcessUsage> usage,
                           const std::string& node);

// rho per socket against the CPU time of every process in `usage`.
std::vector<ProcessShare> cpu_time_shares(std::span<const ProcessUsage> usage,
                                          const SocketTotals& totals,
                                          const std::string& node);
// sigma per socket against end-of-interval resident memory.
std::vector<ProcessShare> memory_shares(std::span<const ProcessUsage> usage,
                                        const SocketTotals& totals,
                                        const std::string& node);
// Both shares merged, one entry per process, same order as `usage`.
std::vector<ProcessShare> process_shares(std::span<const ProcessUsage> usage,
                                         const SocketTotals& totals,
                                         const std::string& node);

struct ProcessMetadata {
  Pid pid = 0;
  std::optional<std::string> cgroup;  // nullopt when unreadable
};

struct DiscoveryResult {
  std::vector<Pid> pids;
  std::size_t unreadable = 0;
};

// True when the cgroup text names the pod, either verbatim or with the dashes
// of the UID turned into underscores (systemd slice naming).
bool cgroup_matches_pod(std::string_view cgroup, std::string_view pod_uid);

DiscoveryResult discover_pids_for_pod(std::string_view pod_uid,
                                      std::span<const ProcessMetadata> processes);

}  // namespace peak
