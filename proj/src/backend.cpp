#include "peak/backend.hpp"

#include <unistd.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "peak/procfs.hpp"

namespace peak {

namespace fs = std::filesystem;

// ---------------------------------------------------------------- replay

ReplayBackend::ReplayBackend(const Trace& trace) : header_(trace.header) {
  for (const std::string& node : header_.nodes) nodes_[node];

  for (const TraceEvent& event : trace.events) {
    if (const auto* r = std::get_if<RaplReading>(&event)) {
      nodes_[r->node].counters[r->t].push_back(CounterSample{
          r->t, SocketId{r->node, r->socket}, r->domain, r->energy_uj,
          header_.wrap_for(r->domain)});
      end_ = std::max(end_, r->t);
    } else if (const auto* p = std::get_if<ProcRecord>(&event)) {
      ProcessScan& scan = nodes_[p->node].scans[p->t];
      scan.node = p->node;
      scan.at = p->t;
      scan.tick_seconds = header_.cpu_tick_seconds;
      scan.processes.push_back(ProcessSample{
          p->t, p->pid, PerSocketUsage{p->cpu_ticks, p->rss_bytes}, p->cgroup});
      end_ = std::max(end_, p->t);
    } else if (const auto* m = std::get_if<IdleMark>(&event)) {
      nodes_[m->node].idle = *m;
      start_ = std::max(start_, m->end);
    } else if (const auto* s = std::get_if<SegmentMark>(&event)) {
      segments_.push_back(*s);
    }
  }
  for (auto& [node, data] : nodes_) {
    for (auto& [t, scan] : data.scans) {
      std::sort(scan.processes.begin(), scan.processes.end(),
                [](const ProcessSample& a, const ProcessSample& b) { return a.pid < b.pid; });
    }
  }
}

std::vector<std::string> ReplayBackend::nodes() const {
  std::vector<std::string> out;
  for (const auto& [node, data] : nodes_) out.push_back(node);
  return out;
}

const ReplayBackend::NodeData& ReplayBackend::data(const std::string& node) const {
  auto it = nodes_.find(node);
  if (it == nodes_.end()) throw Error(fmt::format("unknown node '{}'", node));
  return it->second;
}

std::vector<CounterSample> ReplayBackend::idle_samples(const std::string& node,
                                                       Timestamp, Timestamp) {
  const NodeData& d = data(node);
  if (!d.idle) {
    throw StartupError(fmt::format(
        "trace has no idle window for node '{}'; static power needs an idle mark", node));
  }
  std::vector<CounterSample> out;
  for (auto it = d.counters.lower_bound(d.idle->start);
       it != d.counters.end() && it->first <= d.idle->end; ++it) {
    out.insert(out.end(), it->second.begin(), it->second.end());
  }
  return out;
}

std::vector<CounterSample> ReplayBackend::read_counters(const std::string& node,
                                                        Timestamp at) {
  const NodeData& d = data(node);
  auto it = d.counters.upper_bound(at);
  if (it == d.counters.begin()) return {};
  return std::prev(it)->second;
}

ProcessScan ReplayBackend::read_processes(const std::string& node, Timestamp at) {
  const NodeData& d = data(node);
  auto it = d.scans.upper_bound(at);
  if (it == d.scans.begin()) return ProcessScan{node, at, header_.cpu_tick_seconds, {}};
  return std::prev(it)->second;
}

std::vector<ProcessMetadata> ReplayBackend::process_metadata(const std::string& node,
                                                             Timestamp at) {
  std::vector<ProcessMetadata> out;
  for (const ProcessSample& s : read_processes(node, at).processes) {
    out.push_back(ProcessMetadata{s.pid, s.cgroup});
  }
  return out;
}

TopologyMap ReplayBackend::topology(const std::string&) const {
  return TopologyMap::uniform(header_.sockets, header_.sockets);
}

TracePodSource::TracePodSource(const Trace& trace) {
  for (const TraceEvent& event : trace.events) {
    if (const auto* seen = std::get_if<PodSeen>(&event)) {
      pods_.push_back({PodInfo{seen->uid, seen->name, seen->task, seen->node}, seen->t, {}});
    } else if (const auto* gone = std::get_if<PodGone>(&event)) {
      for (Lifetime& pod : pods_) {
        if (pod.info.uid == gone->uid && !pod.gone) pod.gone = gone->t;
      }
    }
  }
}

std::optional<std::vector<PodInfo>> TracePodSource::poll(Timestamp now) {
  std::vector<PodInfo> out;
  for (const Lifetime& pod : pods_) {
    if (pod.seen <= now && (!pod.gone || *pod.gone > now)) out.push_back(pod.info);
  }
  return out;
}

// ---------------------------------------------------------------- file pods

FilePodSource::FilePodSource(fs::path path) : path_(std::move(path)) {}

std::optional<std::vector<PodInfo>> FilePodSource::poll(Timestamp) {
  std::ifstream in(path_);
  if (!in) return std::nullopt;
  std::vector<PodInfo> out;
  std::string text;
  std::size_t line_no = 0;
  try {
    while (std::getline(in, text)) {
      auto line = TaggedLine::parse(text, ++line_no);
      if (!line || line->tag() != "pod") continue;
      out.push_back(PodInfo{line->str("uid"), line->str_or("name", ""),
                            line->str("task"), line->str("node")});
    }
  } catch (const TaggedLineError&) {
    return std::nullopt;
  }
  return out;
}

// ---------------------------------------------------------------- live

namespace {

std::optional<std::string> slurp(const fs::path& path) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) return std::nullopt;
  return buf.str();
}

}  // namespace

LiveBackend::LiveBackend(LiveBackendOptions options)
    : options_(std::move(options)), epoch_(std::chrono::steady_clock::now()) {
  try {
    zones_ = discover_powercap_zones(options_.powercap_root);
  } catch (const Error& e) {
    throw StartupError(e.what());
  }
  if (zones_.empty()) {
    throw StartupError(fmt::format("no RAPL package zones under {}",
                                   options_.powercap_root.string()));
  }
  if (!fs::is_directory(options_.proc_root)) {
    throw StartupError(fmt::format("proc root {} is not readable",
                                   options_.proc_root.string()));
  }
  unsigned sockets = 0;
  for (const PowercapZone& z : zones_) sockets = std::max(sockets, z.socket + 1);
  if (auto cpuinfo = slurp(options_.proc_root / "cpuinfo")) {
    topology_ = parse_cpuinfo(*cpuinfo);
  } else {
    topology_ = TopologyMap::uniform(std::max(1u, std::thread::hardware_concurrency()),
                                     sockets);
  }
  const long ticks = sysconf(_SC_CLK_TCK);
  tick_seconds_ = ticks > 0 ? 1.0 / static_cast<double>(ticks) : 0.01;
}

Timestamp LiveBackend::now() {
  return std::chrono::duration_cast<Timestamp>(std::chrono::steady_clock::now() - epoch_);
}

std::vector<CounterSample> LiveBackend::idle_samples(const std::string& node,
                                                     Timestamp window, Timestamp step) {
  std::vector<CounterSample> out;
  const Timestamp begin = now();
  while (true) {
    const Timestamp t = now();
    auto scan = read_counters(node, t);
    out.insert(out.end(), scan.begin(), scan.end());
    if (t - begin >= window) break;
    std::this_thread::sleep_for(std::min(step, window - (t - begin)));
  }
  return out;
}

std::vector<CounterSample> LiveBackend::read_counters(const std::string& node,
                                                      Timestamp at) {
  std::vector<CounterSample> out;
  for (const PowercapZone& zone : zones_) {
    try {
      out.push_back(read_powercap_zone(zone, node, at));
    } catch (const Error&) {
      // A missing key surfaces as a ledger gap.
    }
  }
  return out;
}

std::vector<Pid> LiveBackend::list_pids() const {
  std::vector<Pid> pids;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(options_.proc_root, ec)) {
    const std::string name = entry.path().filename().string();
    Pid pid = 0;
    auto [ptr, err] = std::from_chars(name.data(), name.data() + name.size(), pid);
    if (err == std::errc{} && ptr == name.data() + name.size()) pids.push_back(pid);
  }
  std::sort(pids.begin(), pids.end());
  return pids;
}

ProcessScan LiveBackend::read_processes(const std::string& node, Timestamp at) {
  ProcessScan scan{node, at, tick_seconds_, {}};
  for (Pid pid : list_pids()) {
    const fs::path dir = options_.proc_root / std::to_string(pid);
    try {
      auto stat_text = slurp(dir / "stat");
      auto status_text = slurp(dir / "status");
      if (!stat_text || !status_text) {
        ++skipped_;
        continue;
      }
      const ProcStat stat = parse_proc_stat(*stat_text);
      const std::uint64_t rss = parse_status_vmrss(*status_text).value_or(0);
      scan.processes.push_back(ProcessSample{
          at, pid, LastCpuUsage{stat.processor, stat.utime + stat.stime, rss}, {}});
    } catch (const ParseError&) {
      ++skipped_;
    }
  }
  return scan;
}

std::vector<ProcessMetadata> LiveBackend::process_metadata(const std::string&, Timestamp) {
  std::vector<ProcessMetadata> out;
  for (Pid pid : list_pids()) {
    out.push_back(ProcessMetadata{
        pid, slurp(options_.proc_root / std::to_string(pid) / "cgroup")});
  }
  return out;
}

}  // namespace peak
