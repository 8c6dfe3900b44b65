#pragma once

// Sources of counter readings, process scans and pod listings. The replay
// backend serves a parsed trace; the live backend reads powercap and /proc.

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "peak/common.hpp"
#include "peak/counters.hpp"
#include "peak/powercap.hpp"
#include "peak/telemetry.hpp"
#include "peak/trace.hpp"

namespace peak {

class StartupError : public Error {
 public:
  using Error::Error;
};

class TelemetryBackend {
 public:
  virtual ~TelemetryBackend() = default;

  virtual std::vector<std::string> nodes() const = 0;
  virtual Timestamp now() = 0;
  // Counter samples covering the node's idle window. Live backends block for
  // `window`, sampling every `step`.
  virtual std::vector<CounterSample> idle_samples(const std::string& node,
                                                  Timestamp window,
                                                  Timestamp step) = 0;
  // Every (socket, domain) counter of the node, read in one pass.
  virtual std::vector<CounterSample> read_counters(const std::string& node,
                                                   Timestamp at) = 0;
  virtual ProcessScan read_processes(const std::string& node, Timestamp at) = 0;
  virtual std::vector<ProcessMetadata> process_metadata(const std::string& node,
                                                        Timestamp at) = 0;
  virtual TopologyMap topology(const std::string& node) const = 0;
};

struct PodInfo {
  std::string uid;
  std::string name;
  std::string task;
  std::string node;
};

class PodSource {
 public:
  virtual ~PodSource() = default;
  // Pods running at `now`; nullopt when the source cannot be reached.
  virtual std::optional<std::vector<PodInfo>> poll(Timestamp now) = 0;
};

// Serves the latest scan at or before the requested time. Scans are the
// groups of rapl / proc records that share a timestamp on a node.
class ReplayBackend final : public TelemetryBackend {
 public:
  explicit ReplayBackend(const Trace& trace);

  std::vector<std::string> nodes() const override;
  // End of the latest idle window; monitoring starts there.
  Timestamp now() override { return start_; }
  std::vector<CounterSample> idle_samples(const std::string& node,
                                          Timestamp window, Timestamp step) override;
  std::vector<CounterSample> read_counters(const std::string& node, Timestamp at) override;
  ProcessScan read_processes(const std::string& node, Timestamp at) override;
  std::vector<ProcessMetadata> process_metadata(const std::string& node,
                                                Timestamp at) override;
  TopologyMap topology(const std::string& node) const override;

  Timestamp end() const { return end_; }
  const std::vector<SegmentMark>& segments() const { return segments_; }

 private:
  struct NodeData {
    std::map<Timestamp, std::vector<CounterSample>> counters;
    std::map<Timestamp, ProcessScan> scans;
    std::optional<IdleMark> idle;
  };

  const NodeData& data(const std::string& node) const;

  TraceHeader header_;
  std::map<std::string, NodeData> nodes_;
  std::vector<SegmentMark> segments_;
  Timestamp start_{0};
  Timestamp end_{0};
};

class TracePodSource final : public PodSource {
 public:
  explicit TracePodSource(const Trace& trace);
  std::optional<std::vector<PodInfo>> poll(Timestamp now) override;

 private:
  struct Lifetime {
    PodInfo info;
    Timestamp seen;
    std::optional<Timestamp> gone;
  };
  std::vector<Lifetime> pods_;
};

// Re-reads a tagged-line listing ("pod uid=.. name=.. task=.. node=..") on
// every poll. A missing or malformed file counts as unavailable.
class FilePodSource final : public PodSource {
 public:
  explicit FilePodSource(std::filesystem::path path);
  std::optional<std::vector<PodInfo>> poll(Timestamp now) override;

 private:
  std::filesystem::path path_;
};

struct LiveBackendOptions {
  std::filesystem::path proc_root = "/proc";
  std::filesystem::path powercap_root = "/sys/class/powercap";
  std::string node = "local";
};

class LiveBackend final : public TelemetryBackend {
 public:
  explicit LiveBackend(LiveBackendOptions options);

  std::vector<std::string> nodes() const override { return {options_.node}; }
  Timestamp now() override;
  std::vector<CounterSample> idle_samples(const std::string& node, Timestamp window,
                                          Timestamp step) override;
  std::vector<CounterSample> read_counters(const std::string& node, Timestamp at) override;
  ProcessScan read_processes(const std::string& node, Timestamp at) override;
  std::vector<ProcessMetadata> process_metadata(const std::string& node,
                                                Timestamp at) override;
  TopologyMap topology(const std::string&) const override { return topology_; }

  // Processes skipped because their files vanished mid-scan.
  std::size_t skipped_processes() const { return skipped_; }

 private:
  std::vector<Pid> list_pids() const;

  LiveBackendOptions options_;
  std::vector<PowercapZone> zones_;
  TopologyMap topology_;
  double tick_seconds_ = 0.01;
  std::chrono::steady_clock::time_point epoch_;
  std::size_t skipped_ = 0;
};

}  // namespace peak
