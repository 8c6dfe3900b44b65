#pragma once

// Monitoring lifecycle: static profile from an idle window, periodic pod
// polling with pod -> pid binding, and one attribution interval per sampling
// tick.

#include <chrono>
#include <cstddef>
#include <map>
#include <optional>
#include <regex>
#include <string>
#include <utility>
#include <vector>

#include "peak/attribution.hpp"
#include "peak/backend.hpp"
#include "peak/counters.hpp"
#include "peak/telemetry.hpp"
#include "peak/trace.hpp"

namespace peak {

struct MonitorConfig {
  Gamma gamma;
  std::chrono::milliseconds rapl_interval{2000};
  std::chrono::milliseconds poll_interval{5000};
  std::chrono::milliseconds idle_window{30000};
  AttributionMode mode = AttributionMode::Faithful;
  // Matched against the pod name; Nextflow names its task pods "nf-<hash>".
  std::string pod_filter = "^nf-";

  // Throws ConfigError.
  void validate() const;
};

struct PidBinding {
  std::string node;
  Pid pid = 0;
  unsigned instance = 0;
  Timestamp from{};                 // records start with intervals opening here
  std::optional<Timestamp> until;   // instance ended or monitoring stopped
};

struct PodBinding {
  std::string uid;
  std::string name;
  std::string task;
  std::string node;
  std::vector<PidBinding> pids;
  Timestamp first_seen{};
  Timestamp last_seen{};
  bool open = true;
};

struct NodeLedger {
  std::string node;
  std::size_t interval = 0;
  IntervalLedger ledger;
};

struct IntervalGap {
  std::string node;
  std::size_t interval = 0;
  Timestamp start{};
  Timestamp end{};
  std::string reason;
};

struct MonitorCounters {
  std::size_t clamps = 0;
  std::size_t gaps = 0;
  std::size_t pod_source_failures = 0;
  std::size_t unreadable_metadata = 0;
  std::size_t pid_reuses = 0;
  std::size_t binding_conflicts = 0;

  bool operator==(const MonitorCounters&) const = default;
};

struct RunInfo {
  double gamma = Gamma::kDefault;
  AttributionMode mode = AttributionMode::Faithful;
  std::int64_t rapl_interval_ms = 2000;
  std::int64_t poll_interval_ms = 5000;
  Timestamp start{};
  Timestamp stop{};
};

// Everything a monitoring run produced.
struct RawDataset {
  RunInfo run;
  StaticPowerProfile profile;
  std::vector<std::pair<std::string, Domain>> unavailable_domains;
  std::vector<SegmentMark> segments;
  std::vector<PodBinding> pods;
  std::vector<NodeLedger> ledgers;
  std::vector<IntervalGap> gaps;
  std::vector<AttributionRecord> records;
  MonitorCounters counters;
};

class Monitor {
 public:
  Monitor(MonitorConfig config, TelemetryBackend& backend, PodSource& pods);

  // Estimates the static profile and takes the baseline scans. Returns the
  // monitoring start time. Throws StartupError.
  Timestamp start();
  bool running() const { return running_; }

  void poll_pods(Timestamp now);
  // Closes the interval ending at `now` and returns its records.
  std::vector<AttributionRecord> tick(Timestamp now);
  // Closes a final partial interval when `now` lies past the last tick.
  RawDataset stop_and_collect(Timestamp now);

  const MonitorConfig& config() const { return config_; }
  const MonitorCounters& counters() const { return counters_; }
  const std::vector<PodBinding>& pods() const { return pods_; }

 private:
  struct PidState {
    unsigned instance = 0;
    std::optional<std::size_t> pod;  // index into pods_
    std::optional<std::size_t> binding;
    bool alive = false;    // present in the latest scan
    bool scanned = false;  // present in any earlier scan
  };

  struct NodeState {
    std::vector<CounterSample> counters;
    ProcessScan scan;
    TopologyMap topology;
    Timestamp open_since{};
    std::size_t next_interval = 0;
  };

  void close_instance(const std::string& node, Pid pid, PidState& state, Timestamp at);
  std::vector<AttributionRecord> close_interval(const std::string& node, NodeState& state,
                                                Timestamp now);

  MonitorConfig config_;
  TelemetryBackend& backend_;
  PodSource& pod_source_;
  std::regex filter_;
  bool started_ = false;
  bool running_ = false;

  StaticPowerProfile profile_;
  std::vector<std::pair<std::string, Domain>> unavailable_;
  std::map<std::string, NodeState> nodes_;
  std::map<std::pair<std::string, Pid>, PidState> pids_;
  std::vector<PodBinding> pods_;
  std::map<std::string, std::size_t> pod_index_;
  std::vector<NodeLedger> ledgers_;
  std::vector<IntervalGap> gaps_;
  std::vector<AttributionRecord> records_;
  MonitorCounters counters_;
  RunInfo run_;
};

// Single-threaded deterministic schedule over a parsed trace: polls every
// poll_interval and ticks every rapl_interval from the end of the idle window
// until the last sample (or `stop_at`). Polls run before ticks at equal times.
RawDataset run_replay(const MonitorConfig& config, const Trace& trace,
                      std::optional<Timestamp> stop_at = std::nullopt);

}  // namespace peak
