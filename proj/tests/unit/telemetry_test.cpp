#include <gtest/gtest.h>

#include "peak/telemetry.hpp"

namespace {

using namespace peak;

ProcessSample per_socket(Pid pid, std::vector<std::uint64_t> cpu, std::vector<std::uint64_t> rss) {
  return ProcessSample{Timestamp{0}, pid, PerSocketUsage{std::move(cpu), std::move(rss)}, ""};
}

ProcessSample last_cpu(Pid pid, unsigned cpu, std::uint64_t ticks, std::uint64_t rss) {
  return ProcessSample{Timestamp{0}, pid, LastCpuUsage{cpu, ticks, rss}, ""};
}

TEST(Topology, UniformSplit) {
  const TopologyMap t = TopologyMap::uniform(8, 2);
  EXPECT_EQ(t.sockets, 2u);
  EXPECT_EQ(t.socket_for(0), 0u);
  EXPECT_EQ(t.socket_for(3), 0u);
  EXPECT_EQ(t.socket_for(4), 1u);
  EXPECT_EQ(t.socket_for(7), 1u);
}

TEST(Usage, PerSocketDeltas) {
  const ProcessScan prev{"n0", Timestamp{0}, 0.5, {per_socket(1, {10, 20}, {100, 0})}};
  const ProcessScan next{"n0", Timestamp{2'000'000}, 0.5,
                         {per_socket(1, {14, 30}, {150, 50}), per_socket(2, {6, 0}, {10, 0})}};
  const auto u = interval_usage(&prev, next, TopologyMap::uniform(2, 2));
  ASSERT_EQ(u.size(), 2u);
  EXPECT_FALSE(u[0].first_seen);
  EXPECT_DOUBLE_EQ(u[0].cpu_seconds.at(0), 2.0);
  EXPECT_DOUBLE_EQ(u[0].cpu_seconds.at(1), 5.0);
  EXPECT_DOUBLE_EQ(u[0].rss_bytes.at(1), 50.0);
  // Born during the interval: whole cumulative time counts.
  EXPECT_TRUE(u[1].first_seen);
  EXPECT_DOUBLE_EQ(u[1].cpu_seconds.at(0), 3.0);
}

TEST(Usage, RestartedCounterStartsFromZero) {
  const ProcessScan prev{"n0", Timestamp{0}, 1.0, {last_cpu(5, 0, 500, 1)}};
  const ProcessScan next{"n0", Timestamp{1}, 1.0, {last_cpu(5, 0, 20, 1)}};
  const auto u = interval_usage(&prev, next, TopologyMap::uniform(1, 1));
  EXPECT_TRUE(u[0].restarted);
  EXPECT_DOUBLE_EQ(u[0].cpu_seconds.at(0), 20.0);
}

TEST(Usage, LastCpuPutsEverythingOnOneSocket) {
  const ProcessScan prev{"n0", Timestamp{0}, 0.01, {last_cpu(5, 1, 100, 0)}};
  const ProcessScan next{"n0", Timestamp{1}, 0.01, {last_cpu(5, 6, 300, 4096)}};
  const auto u = interval_usage(&prev, next, TopologyMap::uniform(8, 2));
  ASSERT_EQ(u[0].cpu_seconds.size(), 1u);
  EXPECT_DOUBLE_EQ(u[0].cpu_seconds.at(1), 2.0);
  EXPECT_DOUBLE_EQ(u[0].rss_bytes.at(1), 4096.0);
}

TEST(Shares, SumToOnePerSocketAndCountUntracked) {
  const ProcessScan next{"n0", Timestamp{1}, 1.0,
                         {per_socket(1, {3}, {100}), per_socket(2, {1}, {300}),
                          per_socket(900, {4}, {600})}};
  const auto u = interval_usage(nullptr, next, TopologyMap::uniform(1, 1));
  const SocketTotals totals = socket_totals(u, "n0");
  EXPECT_DOUBLE_EQ(totals.cpu_seconds.at(SocketId{"n0", 0}), 8.0);
  const auto shares = process_shares(u, totals, "n0");
  ASSERT_EQ(shares.size(), 3u);
  EXPECT_DOUBLE_EQ(shares[0].sockets.at(SocketId{"n0", 0}).cpu, 3.0 / 8.0);
  EXPECT_DOUBLE_EQ(shares[1].sockets.at(SocketId{"n0", 0}).memory, 0.3);
  double cpu = 0.0, mem = 0.0;
  for (const auto& s : shares) {
    cpu += s.sockets.at(SocketId{"n0", 0}).cpu;
    mem += s.sockets.at(SocketId{"n0", 0}).memory;
  }
  EXPECT_NEAR(cpu, 1.0, 1e-15);
  EXPECT_NEAR(mem, 1.0, 1e-15);
}

TEST(Shares, IdleSocketGivesZero) {
  const ProcessScan next{"n0", Timestamp{1}, 1.0, {per_socket(1, {0}, {0})}};
  const auto u = interval_usage(nullptr, next, TopologyMap::uniform(1, 1));
  const auto shares = process_shares(u, socket_totals(u, "n0"), "n0");
  EXPECT_DOUBLE_EQ(shares[0].sockets.at(SocketId{"n0", 0}).cpu, 0.0);
  EXPECT_DOUBLE_EQ(shares[0].sockets.at(SocketId{"n0", 0}).memory, 0.0);
}

TEST(Cgroup, MatchesVerbatimAndSystemdNames) {
  const std::string uid = "3e2d1c0b-aaaa-4bbb-8ccc-0123456789ab";
  EXPECT_TRUE(cgroup_matches_pod("0::/kubepods/besteffort/pod" + uid + "/abc", uid));
  EXPECT_TRUE(cgroup_matches_pod(
      "0::/kubepods.slice/kubepods-pod3e2d1c0b_aaaa_4bbb_8ccc_0123456789ab.slice/x", uid));
  EXPECT_FALSE(cgroup_matches_pod("0::/system.slice/sshd.service", uid));
  EXPECT_FALSE(cgroup_matches_pod("0::/kubepods/pod3e2d1c0b-aaaa", uid));
}

TEST(Cgroup, DiscoveryCountsUnreadable) {
  const std::string uid = "11111111-2222-4333-8444-555555555555";
  const std::vector<ProcessMetadata> procs = {
      {10, "0::/kubepods/pod" + uid + "/c1"},
      {11, std::nullopt},
      {12, "0::/init.scope"},
      {13, "0::/kubepods.slice/kubepods-pod11111111_2222_4333_8444_555555555555.slice"}};
  const DiscoveryResult r = discover_pids_for_pod(uid, procs);
  EXPECT_EQ(r.pids, (std::vector<Pid>{10, 13}));
  EXPECT_EQ(r.unreadable, 1u);
}

}  // namespace
