#include <gtest/gtest.h>

#include <map>

#include "oracle.hpp"
#include "peak/generator.hpp"
#include "peak/monitor.hpp"

namespace {

using namespace peak;

MonitorConfig one_second(double gamma, AttributionMode mode) {
  MonitorConfig c;
  c.gamma = Gamma(gamma);
  c.mode = mode;
  c.rapl_interval = std::chrono::milliseconds(1000);
  c.poll_interval = std::chrono::milliseconds(1000);
  return c;
}

std::map<oracle::ProcessKey, oracle::Energy> replayed(const RawDataset& data) {
  std::map<oracle::ProcessKey, oracle::Energy> out;
  for (const AttributionRecord& r : data.records) {
    oracle::Energy& e = out[{r.node, r.pid}];
    e.cpu_dynamic += r.cpu_dynamic;
    e.cpu_static += r.cpu_static;
    e.dram_dynamic += r.dram_dynamic;
    e.dram_static += r.dram_static;
  }
  return out;
}

void expect_matches(const std::map<oracle::ProcessKey, oracle::Energy>& got,
                    const std::map<oracle::ProcessKey, oracle::Energy>& want,
                    const std::set<oracle::ProcessKey>& bound) {
  ASSERT_FALSE(bound.empty());
  ASSERT_EQ(got.size(), bound.size());
  for (const auto& key : bound) {
    ASSERT_TRUE(got.contains(key)) << key.second;
    const oracle::Energy& g = got.at(key);
    const oracle::Energy& w = want.at(key);
    EXPECT_TRUE(oracle::rel_close(g.cpu_dynamic, w.cpu_dynamic, 1e-9)) << g.cpu_dynamic << " " << w.cpu_dynamic;
    EXPECT_TRUE(oracle::rel_close(g.cpu_static, w.cpu_static, 1e-9)) << g.cpu_static << " " << w.cpu_static;
    EXPECT_TRUE(oracle::rel_close(g.dram_dynamic, w.dram_dynamic, 1e-9)) << g.dram_dynamic << " " << w.dram_dynamic;
    EXPECT_TRUE(oracle::rel_close(g.dram_static, w.dram_static, 1e-9)) << g.dram_static << " " << w.dram_static;
  }
}

class RandomReplay : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(RandomReplay, FaithfulMatchesOracle) {
  const GeneratedTrace g = generate_trace(random_scenario(GetParam()));
  const double gamma = 0.3;
  const RawDataset data = run_replay(one_second(gamma, AttributionMode::Faithful), g.trace);
  EXPECT_EQ(data.ledgers.size(), 100u);
  EXPECT_TRUE(data.gaps.empty());
  expect_matches(replayed(data), oracle::attribute(g.trace, {gamma, false}),
                 oracle::pod_processes(g.trace));
}

TEST_P(RandomReplay, LinearMatchesOracle) {
  const GeneratedTrace g = generate_trace(random_scenario(GetParam()));
  const RawDataset data = run_replay(one_second(0.3, AttributionMode::Linear), g.trace);
  expect_matches(replayed(data), oracle::attribute(g.trace, {0.3, true}),
                 oracle::pod_processes(g.trace));
}

INSTANTIATE_TEST_SUITE_P(Seeds, RandomReplay, ::testing::Values(1, 2, 3, 4, 5));

}  // namespace
