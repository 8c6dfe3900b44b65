#include "peak/telemetry.hpp"

#include <algorithm>
#include <unordered_map>

#include <fmt/format.h>

namespace peak {

unsigned TopologyMap::socket_for(unsigned cpu) const {
  if (cpu < socket_of_cpu.size()) return socket_of_cpu[cpu];
  return 0;
}

TopologyMap TopologyMap::uniform(unsigned cpus, unsigned sockets) {
  if (sockets == 0) throw ConfigError("topology needs at least one socket");
  TopologyMap map;
  map.sockets = sockets;
  const unsigned per_socket = std::max(1u, cpus / sockets);
  for (unsigned cpu = 0; cpu < cpus; ++cpu) {
    map.socket_of_cpu.push_back(std::min(cpu / per_socket, sockets - 1));
  }
  return map;
}

std::uint64_t ProcessSample::total_cpu_ticks() const {
  if (const auto* live = std::get_if<LastCpuUsage>(&usage)) return live->cpu_ticks;
  std::uint64_t sum = 0;
  for (std::uint64_t t : std::get<PerSocketUsage>(usage).cpu_ticks) sum += t;
  return sum;
}

std::uint64_t ProcessSample::total_rss_bytes() const {
  if (const auto* live = std::get_if<LastCpuUsage>(&usage)) return live->rss_bytes;
  std::uint64_t sum = 0;
  for (std::uint64_t b : std::get<PerSocketUsage>(usage).rss_bytes) sum += b;
  return sum;
}

namespace {

ProcessUsage usage_from(const ProcessSample* prev, const ProcessSample& next,
                        double tick, const TopologyMap& topology) {
  ProcessUsage out;
  out.pid = next.pid;
  out.first_seen = prev == nullptr;

  if (const auto* live = std::get_if<LastCpuUsage>(&next.usage)) {
    const unsigned socket = topology.socket_for(live->cpu);
    std::uint64_t delta = live->cpu_ticks;
    if (prev != nullptr) {
      const std::uint64_t before = prev->total_cpu_ticks();
      if (live->cpu_ticks >= before) {
        delta = live->cpu_ticks - before;
      } else {
        out.restarted = true;
      }
    }
    out.cpu_seconds[socket] = static_cast<double>(delta) * tick;
    out.rss_bytes[socket] = static_cast<double>(live->rss_bytes);
    return out;
  }

  const auto& now = std::get<PerSocketUsage>(next.usage);
  const PerSocketUsage* before =
      prev ? std::get_if<PerSocketUsage>(&prev->usage) : nullptr;
  if (before != nullptr) {
    for (std::size_t s = 0; s < now.cpu_ticks.size(); ++s) {
      const std::uint64_t b = s < before->cpu_ticks.size() ? before->cpu_ticks[s] : 0;
      if (now.cpu_ticks[s] < b) out.restarted = true;
    }
  }
  for (std::size_t s = 0; s < now.cpu_ticks.size(); ++s) {
    std::uint64_t delta = now.cpu_ticks[s];
    if (before != nullptr && !out.restarted && s < before->cpu_ticks.size()) {
      delta -= before->cpu_ticks[s];
    }
    out.cpu_seconds[static_cast<unsigned>(s)] = static_cast<double>(delta) * tick;
  }
  for (std::size_t s = 0; s < now.rss_bytes.size(); ++s) {
    out.rss_bytes[static_cast<unsigned>(s)] = static_cast<double>(now.rss_bytes[s]);
  }
  return out;
}

}  // namespace

std::vector<ProcessUsage> interval_usage(const ProcessScan* prev,
                                         const ProcessScan& next,
                                         const TopologyMap& topology) {
  std::unordered_map<Pid, const ProcessSample*> before;
  if (prev != nullptr) {
    for (const ProcessSample& s : prev->processes) before[s.pid] = &s;
  }
  std::vector<ProcessUsage> out;
  out.reserve(next.processes.size());
  for (const ProcessSample& s : next.processes) {
    auto it = before.find(s.pid);
    out.push_back(usage_from(it == before.end() ? nullptr : it->second, s,
                             next.tick_seconds, topology));
  }
  std::sort(out.begin(), out.end(),
            [](const ProcessUsage& a, const ProcessUsage& b) { return a.pid < b.pid; });
  return out;
}

SocketTotals socket_totals(std::span<const ProcessUsage> usage,
                           const std::string& node) {
  SocketTotals totals;
  for (const ProcessUsage& u : usage) {
    for (const auto& [socket, seconds] : u.cpu_seconds) {
      totals.cpu_seconds[SocketId{node, socket}] += seconds;
    }
    for (const auto& [socket, bytes] : u.rss_bytes) {
      totals.rss_bytes[SocketId{node, socket}] += bytes;
    }
  }
  return totals;
}

namespace {

double ratio(double part, const std::map<SocketId, double>& totals,
             const SocketId& socket) {
  auto it = totals.find(socket);
  if (it == totals.end() || it->second <= 0.0) return 0.0;
  return std::min(1.0, part / it->second);
}

}  // namespace

std::vector<ProcessShare> cpu_time_shares(std::span<const ProcessUsage> usage,
                                          const SocketTotals& totals,
                                          const std::string& node) {
  std::vector<ProcessShare> out;
  out.reserve(usage.size());
  for (const ProcessUsage& u : usage) {
    ProcessShare share{u.pid, {}};
    for (const auto& [socket, seconds] : u.cpu_seconds) {
      const SocketId id{node, socket};
      share.sockets[id].cpu = ratio(seconds, totals.cpu_seconds, id);
    }
    out.push_back(std::move(share));
  }
  return out;
}

std::vector<ProcessShare> memory_shares(std::span<const ProcessUsage> usage,
                                        const SocketTotals& totals,
                                        const std::string& node) {
  std::vector<ProcessShare> out;
  out.reserve(usage.size());
  for (const ProcessUsage& u : usage) {
    ProcessShare share{u.pid, {}};
    for (const auto& [socket, bytes] : u.rss_bytes) {
      const SocketId id{node, socket};
      share.sockets[id].memory = ratio(bytes, totals.rss_bytes, id);
    }
    out.push_back(std::move(share));
  }
  return out;
}

std::vector<ProcessShare> process_shares(std::span<const ProcessUsage> usage,
                                         const SocketTotals& totals,
                                         const std::string& node) {
  std::vector<ProcessShare> cpu = cpu_time_shares(usage, totals, node);
  const std::vector<ProcessShare> mem = memory_shares(usage, totals, node);
  for (std::size_t i = 0; i < cpu.size(); ++i) {
    for (const auto& [socket, s] : mem[i].sockets) {
      cpu[i].sockets[socket].memory = s.memory;
    }
  }
  return cpu;
}

bool cgroup_matches_pod(std::string_view cgroup, std::string_view pod_uid) {
  if (pod_uid.empty()) return false;
  if (cgroup.find(pod_uid) != std::string_view::npos) return true;
  std::string underscored(pod_uid);
  std::replace(underscored.begin(), underscored.end(), '-', '_');
  return cgroup.find(underscored) != std::string_view::npos;
}

DiscoveryResult discover_pids_for_pod(
    std::string_view pod_uid, std::span<const ProcessMetadata> processes) {
  DiscoveryResult result;
  for (const ProcessMetadata& p : processes) {
    if (!p.cgroup) {
      ++result.unreadable;
      continue;
    }
    if (cgroup_matches_pod(*p.cgroup, pod_uid)) result.pids.push_back(p.pid);
  }
  std::sort(result.pids.begin(), result.pids.end());
  return result;
}

}  // namespace peak
