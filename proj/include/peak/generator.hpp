#pragma once

// Synthetic trace generator. Node dynamic power follows a power law in the
// summed utilization of a socket; each process's true share of it follows
// the same law in its own utilization share. The generator writes the trace
// and a ground-truth sidecar with exact per-process energies.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "peak/trace.hpp"

namespace peak {

class ScenarioError : public Error {
 public:
  using Error::Error;
};

struct LoadStep {
  double at = 0.0;            // seconds; holds until the next step
  std::vector<double> cpu;    // busy fraction of each socket's cores
  std::vector<double> rss;    // resident bytes on each socket
};

struct ScenarioProcess {
  Pid pid = 0;
  std::string node;
  double start = 0.0;
  double end = 0.0;
  std::optional<std::string> pod;  // uid; absent for background processes
  std::vector<LoadStep> load;
};

struct ScenarioPod {
  std::string uid;
  std::string name;
  std::string task;
  std::string node;
  double start = 0.0;
  std::optional<double> end;
};

struct ScenarioNode {
  std::string name;
  unsigned sockets = 1;
  unsigned cores_per_socket = 8;
  std::map<Domain, double> static_watts;       // per socket
  std::map<Domain, double> dynamic_max_watts;  // per socket at full load
  double memory_bytes = 64e9;                  // per socket
  std::map<Domain, double> initial_joules;     // counter offsets
};

struct ScenarioSegment {
  double at = 0.0;
  std::string label;
};

struct Scenario {
  std::uint64_t seed = 1;
  double gamma = 0.3;
  double tick = 1.0;         // seconds between samples
  double cpu_tick = 1e-6;    // seconds per CPU-time tick
  double idle = 30.0;        // idle window [0, idle)
  double end = 60.0;
  double noise = 0.0;        // relative amplitude on counter increments
  std::vector<Domain> domains{Domain::CpuPackage, Domain::Dram};
  std::map<Domain, std::uint64_t> wrap_uj;  // defaults when absent
  std::string cgroup_style = "cgroupfs";    // or "systemd"
  std::vector<ScenarioNode> nodes;
  std::vector<ScenarioPod> pods;
  std::vector<ScenarioProcess> processes;
  std::vector<ScenarioSegment> segments;
};

// Throws ScenarioError naming the offending field.
Scenario parse_scenario(std::string_view json_text);
Scenario load_scenario(const std::filesystem::path& path);

struct TruthEntry {
  std::string node;
  Pid pid = 0;  // 0 for node energy no process accounts for
  Domain domain = Domain::CpuPackage;
  double dynamic = 0.0;
  std::optional<std::string> pod;
};

struct TruthSpan {
  std::string label;
  Timestamp start{};
  Timestamp end{};
  double measured = 0.0;            // counter energy over the span
  double static_energy = 0.0;       // true static energy
  double workflow_dynamic = 0.0;    // pod processes
  double other_dynamic = 0.0;       // everything else, noise included

  // Fraction of measured energy owed to static power and the workflow.
  double beta() const { return measured > 0.0 ? 1.0 - other_dynamic / measured : 1.0; }
};

struct GroundTruth {
  double gamma = 0.0;
  TruthSpan monitored;             // idle end to trace end
  std::vector<TruthSpan> segments;
  std::vector<TruthEntry> entries;  // monitored span only

  std::map<std::string, double> segment_betas() const;
};

struct GeneratedTrace {
  Trace trace;
  GroundTruth truth;
};

// Throws ScenarioError for infeasible scenarios.
GeneratedTrace generate_trace(const Scenario& scenario);

void write_truth(std::ostream& out, const GroundTruth& truth);
GroundTruth read_truth(std::istream& in);
GroundTruth read_truth_file(const std::filesystem::path& path);
void write_truth_file(const std::filesystem::path& path, const GroundTruth& truth);

// Built-in scenarios.

// One workflow process per socket stepping through 0%..100% of the capacity
// left by a fixed background load, in 10% steps.
Scenario staircase_scenario(double gamma, double background = 0.2, double step_seconds = 20.0);
// The staircase workload with an "isolated" segment and a "load" segment in
// which unrelated processes add `extra` of the workflow's CPU time.
Scenario colocated_load_scenario(double gamma, double extra = 0.25);
// Many short pods (2-9 s each) on one node.
Scenario short_task_scenario(std::size_t tasks, std::uint64_t seed = 7);
// Random loads for up to five processes on up to two sockets, every process
// bound to a pod from the start of monitoring.
Scenario random_scenario(std::uint64_t seed, std::size_t intervals = 100);

}  // namespace peak
