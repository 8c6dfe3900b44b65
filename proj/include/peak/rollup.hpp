#pragma once

// Aggregation of attribution records into physical tasks (pods), logical
// tasks (task names) and workflow totals, plus per-node energy accounting.
//
// Energies are summed as integer nanojoules so every level of the hierarchy
// adds up exactly, whatever the summation order.

#include <cstdint>
#include <string>
#include <vector>

#include "peak/monitor.hpp"

namespace peak {

inline constexpr double kShortTaskSeconds = 15.0;

class ConsistencyError : public Error {
 public:
  using Error::Error;
};

// Rounds to the nearest nanojoule. Throws ConsistencyError for non-finite or
// out-of-range values.
std::int64_t joules_to_nanojoules(double joules);
inline double nanojoules_to_joules(std::int64_t nj) { return static_cast<double>(nj) / 1e9; }

struct EnergyBreakdown {
  std::int64_t cpu_dynamic = 0;  // nanojoules
  std::int64_t cpu_static = 0;
  std::int64_t dram_dynamic = 0;
  std::int64_t dram_static = 0;

  std::int64_t dynamic() const { return cpu_dynamic + dram_dynamic; }
  std::int64_t static_energy() const { return cpu_static + dram_static; }
  std::int64_t total() const { return dynamic() + static_energy(); }

  EnergyBreakdown& operator+=(const EnergyBreakdown& other);
  bool operator==(const EnergyBreakdown&) const = default;
};

EnergyBreakdown breakdown_of(const AttributionRecord& record);

struct PhysicalTask {
  std::string uid;
  std::string name;
  std::string task;
  std::string node;
  Timestamp start{};
  Timestamp end{};
  bool short_task = false;
  std::size_t records = 0;
  EnergyBreakdown energy;

  double duration_seconds() const { return to_seconds(end - start); }
  bool operator==(const PhysicalTask&) const = default;
};

struct LogicalTask {
  std::string task;
  std::size_t physical_tasks = 0;
  EnergyBreakdown energy;

  bool operator==(const LogicalTask&) const = default;
};

struct BucketTotals {
  std::size_t records = 0;
  EnergyBreakdown energy;

  bool operator==(const BucketTotals&) const = default;
};

struct NodeSummary {
  std::string node;
  double rapl_pkg = 0.0;   // joules measured over all closed intervals
  double rapl_dram = 0.0;
  double static_total = 0.0;
  double attributed_static = 0.0;
  double unattributed_static = 0.0;
  double dynamic_total = 0.0;
  double attributed_dynamic = 0.0;
  // dynamic_total - attributed_dynamic; negative means over-attribution.
  double dynamic_residual = 0.0;
  std::size_t intervals = 0;
  std::size_t gaps = 0;

  double rapl_total() const { return rapl_pkg + rapl_dram; }
  bool over_attributed() const { return dynamic_residual < 0.0; }
  bool operator==(const NodeSummary&) const = default;
};

struct TaskRollup {
  AttributionMode mode = AttributionMode::Faithful;
  double gamma = Gamma::kDefault;
  std::vector<PhysicalTask> physical;  // ordered by start, then uid
  std::vector<LogicalTask> logical;    // ordered by task name
  BucketTotals workflow;               // every record resolved to a pod
  BucketTotals unassigned;             // records of pids never bound
  std::vector<NodeSummary> nodes;      // ordered by node name

  // Sum of measured energy and static energy over all nodes, in joules.
  double rapl_total() const;
  double static_total() const;
  bool operator==(const TaskRollup&) const = default;
};

// Throws ConsistencyError when one pid has overlapping bindings.
TaskRollup rollup(const RawDataset& data);

struct HistogramEntry {
  std::string uid;
  std::int64_t energy = 0;  // nanojoules
};

struct HistogramGroup {
  std::string task;
  std::int64_t total = 0;
  std::vector<HistogramEntry> entries;  // ascending energy, then uid
};

// One group per logical task, ordered by task name.
std::vector<HistogramGroup> energy_histogram(const TaskRollup& rollup);

}  // namespace peak
