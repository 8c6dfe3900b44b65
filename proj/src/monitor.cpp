#include "peak/monitor.hpp"

#include <algorithm>
#include <set>

#include <fmt/format.h>

namespace peak {

void MonitorConfig::validate() const {
  if (rapl_interval.count() <= 0) {
    throw ConfigError("RAPL sampling interval must be positive");
  }
  if (poll_interval.count() <= 0) throw ConfigError("pod polling interval must be positive");
  if (idle_window.count() <= 0) throw ConfigError("idle window must be positive");
}

Monitor::Monitor(MonitorConfig config, TelemetryBackend& backend, PodSource& pods)
    : config_(std::move(config)), backend_(backend), pod_source_(pods) {
  config_.validate();
  try {
    filter_ = std::regex(config_.pod_filter);
  } catch (const std::regex_error& e) {
    throw ConfigError(fmt::format("bad pod filter '{}': {}", config_.pod_filter, e.what()));
  }
  run_.gamma = config_.gamma.value();
  run_.mode = config_.mode;
  run_.rapl_interval_ms = config_.rapl_interval.count();
  run_.poll_interval_ms = config_.poll_interval.count();
}

Timestamp Monitor::start() {
  if (started_) throw StartupError("monitor already started");

  const Timestamp window = std::chrono::duration_cast<Timestamp>(config_.idle_window);
  const Timestamp step = std::chrono::duration_cast<Timestamp>(config_.rapl_interval);
  for (const std::string& node : backend_.nodes()) {
    const std::vector<CounterSample> idle = backend_.idle_samples(node, window, step);
    StaticPowerProfile node_profile;
    try {
      node_profile = estimate_static_power(idle);
    } catch (const Error& e) {
      throw StartupError(fmt::format(
          "cannot estimate static power for node '{}' from its idle window: {}", node,
          e.what()));
    }
    profile_.entries.insert(node_profile.entries.begin(), node_profile.entries.end());
    if (!node_profile.has_domain(Domain::Dram)) unavailable_.emplace_back(node, Domain::Dram);
  }

  const Timestamp at = backend_.now();
  for (const std::string& node : backend_.nodes()) {
    NodeState& state = nodes_[node];
    state.counters = backend_.read_counters(node, at);
    state.scan = backend_.read_processes(node, at);
    state.topology = backend_.topology(node);
    state.open_since = at;
    for (const ProcessSample& s : state.scan.processes) {
      PidState& ps = pids_[{node, s.pid}];
      ps.alive = ps.scanned = true;
    }
  }
  started_ = running_ = true;
  run_.start = at;
  return at;
}

void Monitor::poll_pods(Timestamp now) {
  if (!running_) throw Error("monitor is not running");
  auto listing = pod_source_.poll(now);
  if (!listing) {
    ++counters_.pod_source_failures;
    return;
  }

  std::set<std::string> present;
  for (const PodInfo& info : *listing) {
    if (!std::regex_search(info.name, filter_)) continue;
    present.insert(info.uid);
    auto it = pod_index_.find(info.uid);
    if (it == pod_index_.end()) {
      pod_index_.emplace(info.uid, pods_.size());
      pods_.push_back(PodBinding{info.uid, info.name, info.task, info.node, {}, now, now, true});
    } else {
      pods_[it->second].last_seen = now;
    }
  }
  for (PodBinding& pod : pods_) {
    if (pod.open && !present.contains(pod.uid)) pod.open = false;
  }

  std::map<std::string, std::vector<std::size_t>> open_by_node;
  for (std::size_t i = 0; i < pods_.size(); ++i) {
    if (pods_[i].open && nodes_.contains(pods_[i].node)) {
      open_by_node[pods_[i].node].push_back(i);
    }
  }
  for (const auto& [node, indices] : open_by_node) {
    const std::vector<ProcessMetadata> meta = backend_.process_metadata(node, now);
    bool counted_unreadable = false;
    for (std::size_t index : indices) {
      const DiscoveryResult found = discover_pids_for_pod(pods_[index].uid, meta);
      if (!counted_unreadable) {
        counters_.unreadable_metadata += found.unreadable;
        counted_unreadable = true;
      }
      for (Pid pid : found.pids) {
        PidState& state = pids_[{node, pid}];
        if (state.pod) {
          if (*state.pod != index) ++counters_.binding_conflicts;
          continue;
        }
        state.pod = index;
        state.binding = pods_[index].pids.size();
        pods_[index].pids.push_back(PidBinding{node, pid, state.instance, now, std::nullopt});
      }
    }
  }
}

void Monitor::close_instance(const std::string&, Pid, PidState& state, Timestamp at) {
  if (state.pod && state.binding) {
    PidBinding& binding = pods_[*state.pod].pids[*state.binding];
    if (!binding.until) binding.until = at;
  }
  state.pod.reset();
  state.binding.reset();
}

std::vector<AttributionRecord> Monitor::close_interval(const std::string& node,
                                                       NodeState& state, Timestamp now) {
  std::vector<CounterSample> counters = backend_.read_counters(node, now);
  ProcessScan scan = backend_.read_processes(node, now);
  const std::size_t interval = state.next_interval++;

  const std::vector<ProcessUsage> usage = interval_usage(&state.scan, scan, state.topology);

  // Instance bookkeeping: pid reuse and exits end the bound instance.
  std::set<Pid> present;
  for (const ProcessUsage& u : usage) {
    present.insert(u.pid);
    auto [it, inserted] = pids_.try_emplace(std::pair{node, u.pid});
    PidState& ps = it->second;
    if (!inserted && (u.restarted || (u.first_seen && ps.scanned))) {
      close_instance(node, u.pid, ps, state.open_since);
      ++ps.instance;
      ++counters_.pid_reuses;
    }
    ps.alive = true;
    ps.scanned = true;
  }
  for (const ProcessSample& s : state.scan.processes) {
    if (present.contains(s.pid)) continue;
    PidState& ps = pids_[{node, s.pid}];
    close_instance(node, s.pid, ps, state.open_since);
    ps.alive = false;
  }

  std::vector<AttributionRecord> out;
  auto record_gap = [&](std::string reason) {
    gaps_.push_back(IntervalGap{node, interval, state.open_since, now, std::move(reason)});
    ++counters_.gaps;
  };

  StaticPowerProfile node_profile;
  for (const auto& [key, value] : profile_.entries) {
    if (key.socket.node == node) node_profile.entries.emplace(key, value);
  }

  try {
    IntervalLedger ledger = ledger_for_interval(state.counters, counters, node_profile);
    const SocketTotals totals = socket_totals(usage, node);
    ledger.cpu_time_total = totals.cpu_seconds;
    ledger.memory_total = totals.rss_bytes;
    const std::vector<ProcessShare> shares = process_shares(usage, totals, node);
    const std::vector<ProcessAttribution> attributed =
        attribute_interval(shares, ledger, config_.gamma, config_.mode);

    for (const auto& [key, e] : ledger.energy) {
      if (e.clamped()) ++counters_.clamps;
    }
    for (std::size_t i = 0; i < usage.size(); ++i) {
      const PidState& ps = pids_[{node, usage[i].pid}];
      if (!ps.pod || !ps.binding) continue;
      const PidBinding& binding = pods_[*ps.pod].pids[*ps.binding];
      if (binding.from > ledger.start || binding.until) continue;
      AttributionRecord r;
      r.node = node;
      r.pid = usage[i].pid;
      r.instance = ps.instance;
      r.interval = interval;
      r.start = ledger.start;
      r.end = ledger.end;
      r.cpu_dynamic = attributed[i].cpu.dynamic;
      r.cpu_static = attributed[i].cpu.static_energy;
      r.dram_dynamic = attributed[i].dram.dynamic;
      r.dram_static = attributed[i].dram.static_energy;
      out.push_back(r);
    }
    ledgers_.push_back(NodeLedger{node, interval, std::move(ledger)});
  } catch (const GapError& e) {
    std::string reason = "missing";
    for (const LedgerKey& key : e.keys()) reason += ":" + describe(key);
    record_gap(std::move(reason));
  } catch (const OrderingError&) {
    record_gap("stale-sample");
  } catch (const InvalidIntervalError&) {
    record_gap("empty-interval");
  } catch (const MissingLedgerError&) {
    record_gap("socket-without-ledger");
  }

  state.counters = std::move(counters);
  state.scan = std::move(scan);
  state.open_since = now;
  records_.insert(records_.end(), out.begin(), out.end());
  return out;
}

std::vector<AttributionRecord> Monitor::tick(Timestamp now) {
  if (!running_) throw Error("monitor is not running");
  std::vector<AttributionRecord> out;
  for (auto& [node, state] : nodes_) {
    if (now <= state.open_since) continue;
    auto records = close_interval(node, state, now);
    out.insert(out.end(), records.begin(), records.end());
  }
  return out;
}

RawDataset Monitor::stop_and_collect(Timestamp now) {
  if (!running_) throw Error("monitor is not running");
  tick(now);
  running_ = false;
  run_.stop = now;
  for (PodBinding& pod : pods_) {
    for (PidBinding& binding : pod.pids) {
      if (!binding.until) binding.until = now;
    }
  }

  RawDataset data;
  data.run = run_;
  data.profile = profile_;
  data.unavailable_domains = unavailable_;
  data.pods = pods_;
  data.ledgers = ledgers_;
  data.gaps = gaps_;
  data.records = records_;
  data.counters = counters_;
  return data;
}

RawDataset run_replay(const MonitorConfig& config, const Trace& trace,
                      std::optional<Timestamp> stop_at) {
  ReplayBackend backend(trace);
  TracePodSource pods(trace);
  Monitor monitor(config, backend, pods);
  const Timestamp start = monitor.start();
  const Timestamp end = std::max(start, stop_at.value_or(backend.end()));
  const auto rapl = std::chrono::duration_cast<Timestamp>(config.rapl_interval);
  const auto poll = std::chrono::duration_cast<Timestamp>(config.poll_interval);

  Timestamp next_poll = start;
  Timestamp next_tick = start + rapl;
  while (true) {
    const Timestamp t = std::min(next_poll, next_tick);
    if (t > end) break;
    if (next_poll == t) {
      monitor.poll_pods(t);
      next_poll += poll;
    }
    if (next_tick == t) {
      monitor.tick(t);
      next_tick += rapl;
    }
  }
  RawDataset data = monitor.stop_and_collect(end);
  data.segments = backend.segments();
  return data;
}

}  // namespace peak
