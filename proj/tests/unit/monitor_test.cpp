#include <gtest/gtest.h>

#include <cmath>

#include "peak/backend.hpp"
#include "peak/monitor.hpp"
#include "trace_builder.hpp"

namespace {

using namespace peak;
using testing_support::pod_cgroup;
using testing_support::TraceBuilder;

const std::string kUid = "aaaaaaaa-bbbb-4ccc-8ddd-eeeeeeeeeeee";

MonitorConfig fast() {
  MonitorConfig c;
  c.rapl_interval = std::chrono::milliseconds(1000);
  c.poll_interval = std::chrono::milliseconds(1000);
  return c;
}

// Pod seen at 10, process 50 busy in it, background pid 1; ticks to 15.
TraceBuilder steady(double end = 15) {
  TraceBuilder b;
  b.proc(10, 1, 0, 1000).proc(10, 50, 0, 3000, pod_cgroup(kUid)).pod(10, kUid, "nf-x", "T");
  for (int t = 11; t <= end; ++t) {
    b.counters(t, 10.0, 1.0)
        .proc(t, 1, 25 * (t - 10), 1000)
        .proc(t, 50, 75 * (t - 10), 3000, pod_cgroup(kUid));
  }
  return b;
}

class NoPods final : public PodSource {
 public:
  std::optional<std::vector<PodInfo>> poll(Timestamp) override { return std::nullopt; }
};

TEST(Config, Validation) {
  MonitorConfig c;
  EXPECT_NO_THROW(c.validate());
  c.rapl_interval = std::chrono::milliseconds(0);
  EXPECT_THROW(c.validate(), ConfigError);
  c = MonitorConfig{};
  c.poll_interval = std::chrono::milliseconds(-5);
  EXPECT_THROW(c.validate(), ConfigError);
  c = MonitorConfig{};
  c.idle_window = std::chrono::milliseconds(0);
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_EQ(MonitorConfig{}.rapl_interval.count(), 2000);
  EXPECT_EQ(MonitorConfig{}.poll_interval.count(), 5000);
  EXPECT_EQ(MonitorConfig{}.idle_window.count(), 30000);
  EXPECT_DOUBLE_EQ(MonitorConfig{}.gamma.value(), 0.3);
}

TEST(Config, BadFilterRejected) {
  const Trace t = steady().trace();
  ReplayBackend backend(t);
  TracePodSource pods(t);
  MonitorConfig c = fast();
  c.pod_filter = "([";
  EXPECT_THROW(Monitor(c, backend, pods), ConfigError);
}

TEST(Startup, NeedsIdleWindow) {
  Trace t = steady().trace();
  t.events.erase(t.events.begin());  // drop the idle mark
  EXPECT_THROW(run_replay(fast(), t), StartupError);
}

TEST(Startup, TwiceRejected) {
  const Trace t = steady().trace();
  ReplayBackend backend(t);
  TracePodSource pods(t);
  Monitor m(fast(), backend, pods);
  EXPECT_EQ(m.start(), TraceBuilder::seconds(10));
  EXPECT_TRUE(m.running());
  EXPECT_THROW(m.start(), StartupError);
}

TEST(Startup, TickBeforeStartRejected) {
  const Trace t = steady().trace();
  ReplayBackend backend(t);
  TracePodSource pods(t);
  Monitor m(fast(), backend, pods);
  EXPECT_THROW(m.tick(TraceBuilder::seconds(11)), Error);
}

TEST(Replay, OneRecordPerBoundProcessPerInterval) {
  const RawDataset d = run_replay(fast(), steady().trace());
  EXPECT_EQ(d.ledgers.size(), 5u);
  ASSERT_EQ(d.records.size(), 5u);
  ASSERT_EQ(d.pods.size(), 1u);
  ASSERT_EQ(d.pods[0].pids.size(), 1u);
  EXPECT_EQ(d.pods[0].pids[0].pid, 50);
  for (const AttributionRecord& r : d.records) {
    EXPECT_EQ(r.pid, 50);
    // 75% of the CPU time, 75% of memory.
    EXPECT_NEAR(r.cpu_dynamic, 10.0 * std::pow(0.75, 0.3), 1e-9);
    EXPECT_NEAR(r.cpu_static, 30.0, 1e-9);
    EXPECT_NEAR(r.dram_dynamic, 1.0 * std::pow(0.75, 0.3), 1e-9);
    EXPECT_NEAR(r.dram_static, 3.0, 1e-9);
  }
  EXPECT_EQ(d.run.start, TraceBuilder::seconds(10));
  EXPECT_EQ(d.run.stop, TraceBuilder::seconds(15));
  EXPECT_TRUE(d.unavailable_domains.empty());
  EXPECT_NEAR(d.profile.watts(LedgerKey{SocketId{"n0", 0}, Domain::CpuPackage}), 40.0, 1e-9);
}

TEST(Replay, AdoptionWaitsForPoll) {
  MonitorConfig c = fast();
  c.poll_interval = std::chrono::milliseconds(3000);
  const RawDataset d = run_replay(c, steady().trace());
  // Polls at 10 and 13: bound at 10, so records from the first interval.
  EXPECT_EQ(d.records.size(), 5u);

  TraceBuilder b;
  b.proc(10, 1, 0, 1000).proc(10, 50, 0, 3000, pod_cgroup(kUid));
  for (int t = 11; t <= 16; ++t) {
    if (t == 11) b.pod(11, kUid, "nf-x", "T");
    b.counters(t, 10.0, 1.0).proc(t, 1, 25 * (t - 10), 1000).proc(t, 50, 75 * (t - 10), 3000, pod_cgroup(kUid));
  }
  const RawDataset late = run_replay(c, b.trace());
  // Pod visible at 11, first poll after that at 13: intervals from 13 on.
  ASSERT_EQ(late.records.size(), 3u);
  EXPECT_EQ(late.records.front().start, TraceBuilder::seconds(13));
  EXPECT_EQ(late.pods[0].first_seen, TraceBuilder::seconds(13));
}

TEST(Replay, FilterSkipsOtherPods) {
  TraceBuilder b;
  b.proc(10, 50, 0, 3000, pod_cgroup(kUid)).pod(10, kUid, "coredns-abc", "-");
  for (int t = 11; t <= 13; ++t) b.counters(t, 10.0, 1.0).proc(t, 50, 75 * (t - 10), 3000, pod_cgroup(kUid));
  const RawDataset d = run_replay(fast(), b.trace());
  EXPECT_TRUE(d.pods.empty());
  EXPECT_TRUE(d.records.empty());
  EXPECT_EQ(d.ledgers.size(), 3u);
}

TEST(Replay, ForkedChildAdoptedAtNextPoll) {
  TraceBuilder b;
  b.proc(10, 50, 0, 3000, pod_cgroup(kUid)).pod(10, kUid, "nf-x", "T");
  for (int t = 11; t <= 14; ++t) {
    b.counters(t, 10.0, 1.0).proc(t, 50, 50 * (t - 10), 3000, pod_cgroup(kUid));
    if (t >= 12) b.proc(t, 51, 50 * (t - 11), 1000, pod_cgroup(kUid));
  }
  const RawDataset d = run_replay(fast(), b.trace());
  ASSERT_EQ(d.pods[0].pids.size(), 2u);
  EXPECT_EQ(d.pods[0].pids[1].pid, 51);
  EXPECT_EQ(d.pods[0].pids[1].from, TraceBuilder::seconds(12));
  std::size_t child = 0;
  for (const auto& r : d.records) child += r.pid == 51;
  EXPECT_EQ(child, 2u);  // [12,13] and [13,14]
}

TEST(Replay, PidReuseStartsNewInstance) {
  TraceBuilder b;
  b.proc(10, 1, 0, 1000).proc(10, 50, 0, 3000, pod_cgroup(kUid)).pod(10, kUid, "nf-x", "T");
  b.counters(11, 10, 1).proc(11, 1, 10, 1000).proc(11, 50, 100, 3000, pod_cgroup(kUid));
  b.counters(12, 10, 1).proc(12, 1, 20, 1000).proc(12, 50, 200, 3000, pod_cgroup(kUid));
  // Same pid, counter restarted, now outside the pod.
  b.counters(13, 10, 1).proc(13, 1, 30, 1000).proc(13, 50, 5, 3000);
  b.counters(14, 10, 1).proc(14, 1, 40, 1000).proc(14, 50, 15, 3000);
  const RawDataset d = run_replay(fast(), b.trace());
  EXPECT_EQ(d.counters.pid_reuses, 1u);
  ASSERT_EQ(d.pods[0].pids.size(), 1u);
  EXPECT_EQ(d.pods[0].pids[0].until, TraceBuilder::seconds(12));
  ASSERT_EQ(d.records.size(), 2u);
  EXPECT_EQ(d.records.back().end, TraceBuilder::seconds(12));
}

TEST(Replay, ExitedProcessClosesBinding) {
  TraceBuilder b;
  b.proc(10, 1, 0, 1000).proc(10, 50, 0, 3000, pod_cgroup(kUid)).pod(10, kUid, "nf-x", "T");
  b.counters(11, 10, 1).proc(11, 1, 10, 1000).proc(11, 50, 100, 3000, pod_cgroup(kUid));
  b.counters(12, 10, 1).proc(12, 1, 20, 1000);
  b.counters(13, 10, 1).proc(13, 1, 30, 1000);
  const RawDataset d = run_replay(fast(), b.trace());
  EXPECT_EQ(d.records.size(), 1u);
  EXPECT_EQ(d.pods[0].pids[0].until, TraceBuilder::seconds(11));
}

TEST(Replay, MissingCounterRecordsGap) {
  TraceBuilder b;
  b.proc(10, 50, 0, 3000, pod_cgroup(kUid)).pod(10, kUid, "nf-x", "T");
  b.counters(11, 10, 1).proc(11, 50, 100, 3000, pod_cgroup(kUid));
  b.pkg_only(12, 10).proc(12, 50, 200, 3000, pod_cgroup(kUid));
  b.counters(13, 10, 1).proc(13, 50, 300, 3000, pod_cgroup(kUid));
  const RawDataset d = run_replay(fast(), b.trace());
  // The reading is missing at the end of [11,12] and the start of [12,13].
  ASSERT_EQ(d.gaps.size(), 2u);
  EXPECT_EQ(d.gaps[0].start, TraceBuilder::seconds(11));
  EXPECT_EQ(d.gaps[1].start, TraceBuilder::seconds(12));
  EXPECT_EQ(d.gaps[0].reason, "missing:n0/socket0/dram");
  EXPECT_EQ(d.counters.gaps, 2u);
  EXPECT_EQ(d.ledgers.size(), 1u);
  EXPECT_EQ(d.records.size(), 1u);
}

TEST(Replay, ClampCounted) {
  TraceBuilder b;
  b.proc(10, 50, 0, 3000, pod_cgroup(kUid)).pod(10, kUid, "nf-x", "T");
  b.counters(11, -5, 1).proc(11, 50, 100, 3000, pod_cgroup(kUid));
  const RawDataset d = run_replay(fast(), b.trace());
  EXPECT_EQ(d.counters.clamps, 1u);
  ASSERT_EQ(d.records.size(), 1u);
  EXPECT_DOUBLE_EQ(d.records[0].cpu_dynamic, 0.0);
  EXPECT_NEAR(d.ledgers[0].ledger.energy.begin()->second.clamped_by, 5.0, 1e-6);
}

TEST(Replay, StopImmediately) {
  const RawDataset d = run_replay(fast(), steady().trace(), TraceBuilder::seconds(10));
  EXPECT_TRUE(d.records.empty());
  EXPECT_TRUE(d.ledgers.empty());
  EXPECT_EQ(d.run.stop, d.run.start);
}

TEST(Replay, PartialFinalInterval) {
  MonitorConfig c = fast();
  c.rapl_interval = std::chrono::milliseconds(2000);
  const RawDataset d = run_replay(c, steady().trace());
  // Ticks at 12 and 14, then a final [14, 15] interval.
  ASSERT_EQ(d.ledgers.size(), 3u);
  EXPECT_EQ(d.ledgers.back().ledger.start, TraceBuilder::seconds(14));
  EXPECT_EQ(d.ledgers.back().ledger.end, TraceBuilder::seconds(15));
  for (const PodBinding& p : d.pods) {
    for (const PidBinding& b : p.pids) EXPECT_EQ(b.until, TraceBuilder::seconds(15));
  }
}

TEST(Replay, UnavailablePodSourceCounted) {
  const Trace t = steady().trace();
  ReplayBackend backend(t);
  NoPods pods;
  Monitor m(fast(), backend, pods);
  m.start();
  m.poll_pods(TraceBuilder::seconds(10));
  m.poll_pods(TraceBuilder::seconds(11));
  m.tick(TraceBuilder::seconds(11));
  const RawDataset d = m.stop_and_collect(TraceBuilder::seconds(11));
  EXPECT_EQ(d.counters.pod_source_failures, 2u);
  EXPECT_TRUE(d.records.empty());
  EXPECT_THROW(m.tick(TraceBuilder::seconds(12)), Error);
}

TEST(Replay, BackgroundProcessesShareDenominator) {
  TraceBuilder b;
  b.proc(10, 1, 0, 1000).proc(10, 2, 0, 0).proc(10, 50, 0, 3000, pod_cgroup(kUid)).pod(10, kUid, "nf-x", "T");
  b.counters(11, 10, 1).proc(11, 1, 50, 1000).proc(11, 2, 50, 0).proc(11, 50, 100, 3000, pod_cgroup(kUid));
  const RawDataset d = run_replay(fast(), b.trace());
  ASSERT_EQ(d.records.size(), 1u);
  EXPECT_NEAR(d.records[0].cpu_static, 40.0 * 0.5, 1e-9);
  EXPECT_NEAR(d.ledgers[0].ledger.cpu_time_total.at(SocketId{"n0", 0}), 2.0, 1e-12);
}

TEST(Replay, Deterministic) {
  const Trace t = steady(40).trace();
  const RawDataset a = run_replay(fast(), t);
  const RawDataset b = run_replay(fast(), t);
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    EXPECT_EQ(a.records[i].cpu_dynamic, b.records[i].cpu_dynamic);
    EXPECT_EQ(a.records[i].dram_static, b.records[i].dram_static);
  }
}

}  // namespace
