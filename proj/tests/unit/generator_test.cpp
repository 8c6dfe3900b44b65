#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include "peak/counters.hpp"
#include "peak/generator.hpp"

namespace {

using namespace peak;

ScenarioNode node(unsigned sockets = 1) {
  return ScenarioNode{"n", sockets, 4, {{Domain::CpuPackage, 30}, {Domain::Dram, 2}},
                      {{Domain::CpuPackage, 60}, {Domain::Dram, 4}}, 64e9, {}};
}

Scenario base() {
  Scenario s;
  s.idle = 10;
  s.end = 30;
  s.nodes.push_back(node());
  return s;
}

// Per-tick package increments in joules, from the first sample after `from`.
std::vector<double> pkg_steps(const Trace& t, double from) {
  std::vector<double> out;
  std::optional<std::uint64_t> prev;
  for (const auto& e : t.events) {
    const auto* r = std::get_if<RaplReading>(&e);
    if (!r || r->domain != Domain::CpuPackage || to_seconds(r->t) < from) continue;
    if (prev) {
      const std::uint64_t wrap = t.header.wrap_for(Domain::CpuPackage);
      out.push_back(microjoules_to_joules((r->energy_uj + wrap - *prev) % wrap));
    }
    prev = r->energy_uj;
  }
  return out;
}

TEST(Generator, NoProcessesMeansStaticOnly) {
  const GeneratedTrace g = generate_trace(base());
  EXPECT_NEAR(g.truth.monitored.measured, g.truth.monitored.static_energy, 1e-6);
  EXPECT_NEAR(g.truth.monitored.static_energy, 20 * (30 + 2), 1e-6);
  for (double step : pkg_steps(g.trace, 0)) EXPECT_NEAR(step, 30.0, 1e-6);
}

TEST(Generator, FullLoadIsAllDynamic) {
  Scenario s = base();
  s.pods.push_back(ScenarioPod{"0aaaaaaa-0000-4000-8000-000000000000", "nf-a", "A", "n", 10, {}});
  s.processes.push_back(
      ScenarioProcess{10, "n", 10, 30, "0aaaaaaa-0000-4000-8000-000000000000", {LoadStep{10, {1.0}, {64e9}}}});
  const GeneratedTrace g = generate_trace(s);
  double pkg = 0;
  for (const TruthEntry& e : g.truth.entries) {
    if (e.pid == 10 && e.domain == Domain::CpuPackage) pkg += e.dynamic;
  }
  EXPECT_NEAR(pkg, 60.0 * 20, 1e-6);
  EXPECT_NEAR(g.truth.monitored.other_dynamic, 0.0, 1e-6);
  EXPECT_NEAR(g.truth.monitored.beta(), 1.0, 1e-12);
}

TEST(Generator, StaircaseRaisesPowerMonotonically) {
  Scenario s = base();
  s.end = 10 + 10 * 5;
  ScenarioProcess p{10, "n", 10, s.end, std::nullopt, {}};
  for (int k = 0; k < 10; ++k) p.load.push_back(LoadStep{10.0 + 5 * k, {0.1 * (k + 1)}, {1e9}});
  s.processes.push_back(p);
  const auto steps = pkg_steps(generate_trace(s).trace, 10);
  ASSERT_EQ(steps.size(), 50u);
  // rss and cpu of scan k reflect step k-1; compare one tick per step.
  for (int k = 1; k < 10; ++k) EXPECT_GT(steps[5 * k + 1], steps[5 * (k - 1) + 1]);
}

TEST(Generator, TruthConservesEnergy) {
  for (std::uint64_t seed : {1, 2, 3, 4}) {
    Scenario s = random_scenario(seed);
    s.noise = 0.0;
    const GeneratedTrace g = generate_trace(s);
    double sum = 0;
    for (const TruthEntry& e : g.truth.entries) sum += e.dynamic;
    const TruthSpan& m = g.truth.monitored;
    EXPECT_NEAR(sum, m.workflow_dynamic + m.other_dynamic, 1e-6 * m.measured);
    EXPECT_NEAR(m.static_energy + m.workflow_dynamic + m.other_dynamic, m.measured,
                1e-9 * m.measured);
  }
}

TEST(Generator, Deterministic) {
  const Scenario s = random_scenario(77);
  EXPECT_EQ(format_trace(generate_trace(s).trace), format_trace(generate_trace(s).trace));
}

TEST(Generator, RejectsInfeasible) {
  Scenario over = base();
  over.processes.push_back(ScenarioProcess{1, "n", 10, 30, std::nullopt, {LoadStep{10, {0.7}, {1e9}}}});
  over.processes.push_back(ScenarioProcess{2, "n", 10, 30, std::nullopt, {LoadStep{10, {0.6}, {1e9}}}});
  EXPECT_THROW(generate_trace(over), ScenarioError);

  Scenario grid = base();
  grid.processes.push_back(ScenarioProcess{1, "n", 10.5, 30, std::nullopt, {LoadStep{10.5, {0.1}, {1e9}}}});
  EXPECT_THROW(generate_trace(grid), ScenarioError);

  Scenario mem = base();
  mem.processes.push_back(ScenarioProcess{1, "n", 10, 30, std::nullopt, {LoadStep{10, {0.1}, {65e9}}}});
  EXPECT_THROW(generate_trace(mem), ScenarioError);

  Scenario pod = base();
  pod.processes.push_back(ScenarioProcess{1, "n", 10, 30, "missing", {LoadStep{10, {0.1}, {1e9}}}});
  EXPECT_THROW(generate_trace(pod), ScenarioError);

  Scenario gamma = base();
  gamma.gamma = 1.5;
  EXPECT_THROW(generate_trace(gamma), ScenarioError);

  Scenario mixed = base();
  mixed.nodes.push_back(node(2));
  mixed.nodes.back().name = "m";
  EXPECT_THROW(generate_trace(mixed), ScenarioError);
}

TEST(Scenario, ParsesFixtureFile) {
  const Scenario s = load_scenario(std::string(PEAK_TEST_DATA) + "/scenarios/two_pods.json");
  EXPECT_DOUBLE_EQ(s.gamma, 0.4);
  EXPECT_EQ(s.cgroup_style, "systemd");
  ASSERT_EQ(s.nodes.size(), 1u);
  EXPECT_EQ(s.nodes[0].sockets, 2u);
  EXPECT_DOUBLE_EQ(s.nodes[0].static_watts.at(Domain::CpuPackage), 35.0);
  ASSERT_EQ(s.pods.size(), 2u);
  EXPECT_EQ(s.pods[0].end, 25.0);
  EXPECT_FALSE(s.pods[1].end.has_value());
  ASSERT_EQ(s.processes.size(), 3u);
  EXPECT_FALSE(s.processes[2].pod.has_value());
  EXPECT_EQ(s.processes[0].load[1].cpu, (std::vector<double>{0.25, 0.25}));

  // Systemd-style cgroups carry the uid with underscores.
  const Trace t = generate_trace(s).trace;
  bool underscored = false;
  for (const auto& e : t.events) {
    if (const auto* p = std::get_if<ProcRecord>(&e)) {
      underscored |= p->cgroup.find("9b1c2d3e_0000_4000_8000_000000000001") != std::string::npos;
    }
  }
  EXPECT_TRUE(underscored);
}

TEST(Scenario, BadJsonNamesField) {
  EXPECT_THROW(parse_scenario("{"), ScenarioError);
  EXPECT_THROW(parse_scenario("[]"), ScenarioError);
  std::ifstream in(std::string(PEAK_TEST_DATA) + "/scenarios/two_pods.json");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  text.replace(text.find("\"sockets\": 2"), 12, "\"sockets\": \"two\"");
  try {
    parse_scenario(text);
    FAIL();
  } catch (const ScenarioError& e) {
    EXPECT_NE(std::string(e.what()).find("sockets"), std::string::npos) << e.what();
  }
}

TEST(Truth, RoundTrip) {
  const GeneratedTrace g = generate_trace(colocated_load_scenario(0.3));
  std::stringstream io;
  write_truth(io, g.truth);
  const GroundTruth back = read_truth(io);
  EXPECT_EQ(back.gamma, g.truth.gamma);
  EXPECT_EQ(back.monitored.measured, g.truth.monitored.measured);
  ASSERT_EQ(back.segments.size(), g.truth.segments.size());
  EXPECT_EQ(back.segment_betas(), g.truth.segment_betas());
  ASSERT_EQ(back.entries.size(), g.truth.entries.size());
  for (std::size_t i = 0; i < back.entries.size(); ++i) {
    EXPECT_EQ(back.entries[i].dynamic, g.truth.entries[i].dynamic);
    EXPECT_EQ(back.entries[i].pod, g.truth.entries[i].pod);
  }
}

TEST(Builtins, Shapes) {
  const Scenario stair = staircase_scenario(0.3);
  EXPECT_DOUBLE_EQ(stair.gamma, 0.3);
  const Scenario co = colocated_load_scenario(0.3);
  ASSERT_EQ(co.segments.size(), 2u);
  EXPECT_EQ(co.segments[0].label, "isolated");
  const Scenario shorts = short_task_scenario(25);
  EXPECT_EQ(shorts.pods.size(), 25u);
  for (const auto& p : shorts.processes) {
    if (p.pod) {
      EXPECT_LT(p.end - p.start, 10.0);
    }
  }
  const Scenario r = random_scenario(5);
  EXPECT_LE(r.processes.size(), 5u);
  EXPECT_LE(r.nodes[0].sockets, 2u);
}

}  // namespace
