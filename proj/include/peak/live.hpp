#pragma once

// Threaded live run: a sampling loop ticking every rapl_interval and a pod
// polling loop every poll_interval, sharing one Monitor under a mutex.

#include <atomic>
#include <chrono>
#include <optional>

#include "peak/monitor.hpp"

namespace peak {

struct LiveRunOptions {
  std::optional<std::chrono::milliseconds> duration;
  // Checked between ticks; set from a signal handler to stop early.
  const std::atomic<bool>* stop = nullptr;
};

// Blocks through the idle window, then runs until the duration elapses or
// `stop` is raised. Throws StartupError before any loop starts.
RawDataset run_live(const MonitorConfig& config, TelemetryBackend& backend, PodSource& pods,
                    const LiveRunOptions& options);

}  // namespace peak
