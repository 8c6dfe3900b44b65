#include "peak/rollup.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <fmt/format.h>

namespace peak {

std::int64_t joules_to_nanojoules(double joules) {
  const double nj = joules * 1e9;
  if (!std::isfinite(nj) || std::fabs(nj) >= 9.2e18) {
    throw ConsistencyError(fmt::format("energy {} J cannot be represented in nanojoules", joules));
  }
  return std::llround(nj);
}

EnergyBreakdown& EnergyBreakdown::operator+=(const EnergyBreakdown& other) {
  cpu_dynamic += other.cpu_dynamic;
  cpu_static += other.cpu_static;
  dram_dynamic += other.dram_dynamic;
  dram_static += other.dram_static;
  return *this;
}

EnergyBreakdown breakdown_of(const AttributionRecord& r) {
  return EnergyBreakdown{joules_to_nanojoules(r.cpu_dynamic), joules_to_nanojoules(r.cpu_static),
                         joules_to_nanojoules(r.dram_dynamic),
                         joules_to_nanojoules(r.dram_static)};
}

double TaskRollup::rapl_total() const {
  double sum = 0.0;
  for (const NodeSummary& n : nodes) sum += n.rapl_total();
  return sum;
}

double TaskRollup::static_total() const {
  double sum = 0.0;
  for (const NodeSummary& n : nodes) sum += n.static_total;
  return sum;
}

namespace {

struct BindingRef {
  std::size_t pod;
  const PidBinding* binding;
};

using PidKey = std::pair<std::string, Pid>;

std::map<PidKey, std::vector<BindingRef>> index_bindings(const std::vector<PodBinding>& pods) {
  std::map<PidKey, std::vector<BindingRef>> index;
  for (std::size_t i = 0; i < pods.size(); ++i) {
    for (const PidBinding& b : pods[i].pids) index[{b.node, b.pid}].push_back({i, &b});
  }
  for (auto& [key, refs] : index) {
    std::sort(refs.begin(), refs.end(), [](const BindingRef& a, const BindingRef& b) {
      return a.binding->from < b.binding->from;
    });
    for (std::size_t i = 1; i < refs.size(); ++i) {
      const PidBinding& prev = *refs[i - 1].binding;
      if (!prev.until || *prev.until > refs[i].binding->from) {
        throw ConsistencyError(fmt::format(
            "pid {} on node '{}' is bound to pods '{}' and '{}' over overlapping spans",
            key.second, key.first, pods[refs[i - 1].pod].uid, pods[refs[i].pod].uid));
      }
    }
  }
  return index;
}

std::optional<std::size_t> resolve(const std::map<PidKey, std::vector<BindingRef>>& index,
                                   const AttributionRecord& r) {
  auto it = index.find({r.node, r.pid});
  if (it == index.end()) return std::nullopt;
  for (const BindingRef& ref : it->second) {
    const PidBinding& b = *ref.binding;
    if (b.instance == r.instance && b.from <= r.start && (!b.until || r.end <= *b.until)) {
      return ref.pod;
    }
  }
  return std::nullopt;
}

}  // namespace

TaskRollup rollup(const RawDataset& data) {
  TaskRollup out;
  out.mode = data.run.mode;
  out.gamma = data.run.gamma;

  const auto index = index_bindings(data.pods);

  // Fixed pid-then-interval order.
  std::vector<const AttributionRecord*> ordered;
  ordered.reserve(data.records.size());
  for (const AttributionRecord& r : data.records) ordered.push_back(&r);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const AttributionRecord* a, const AttributionRecord* b) {
                     return std::tie(a->node, a->pid, a->interval) <
                            std::tie(b->node, b->pid, b->interval);
                   });

  std::vector<PhysicalTask> physical(data.pods.size());
  for (std::size_t i = 0; i < data.pods.size(); ++i) {
    const PodBinding& pod = data.pods[i];
    physical[i].uid = pod.uid;
    physical[i].name = pod.name;
    physical[i].task = pod.task;
    physical[i].node = pod.node;
    physical[i].start = pod.first_seen;
    physical[i].end = pod.last_seen;
  }

  std::map<std::string, EnergyBreakdown> node_attributed;
  for (const AttributionRecord* r : ordered) {
    const EnergyBreakdown e = breakdown_of(*r);
    node_attributed[r->node] += e;
    if (auto pod = resolve(index, *r)) {
      PhysicalTask& task = physical[*pod];
      task.energy += e;
      ++task.records;
      task.end = std::max(task.end, r->end);
      out.workflow.energy += e;
      ++out.workflow.records;
    } else {
      out.unassigned.energy += e;
      ++out.unassigned.records;
    }
  }

  std::map<std::string, LogicalTask> logical;
  for (PhysicalTask& task : physical) {
    task.short_task = task.duration_seconds() < kShortTaskSeconds;
    LogicalTask& group = logical[task.task];
    group.task = task.task;
    ++group.physical_tasks;
    group.energy += task.energy;
  }
  std::sort(physical.begin(), physical.end(), [](const PhysicalTask& a, const PhysicalTask& b) {
    return std::tie(a.start, a.uid) < std::tie(b.start, b.uid);
  });
  out.physical = std::move(physical);
  for (auto& [name, group] : logical) out.logical.push_back(std::move(group));

  std::map<std::string, NodeSummary> nodes;
  for (const NodeLedger& nl : data.ledgers) {
    NodeSummary& n = nodes[nl.node];
    n.node = nl.node;
    ++n.intervals;
    for (const auto& [key, e] : nl.ledger.energy) {
      (key.domain == Domain::CpuPackage ? n.rapl_pkg : n.rapl_dram) += e.total;
      n.static_total += e.static_energy;
      n.dynamic_total += e.dynamic;
    }
  }
  for (const IntervalGap& g : data.gaps) {
    NodeSummary& n = nodes[g.node];
    n.node = g.node;
    ++n.gaps;
  }
  for (const auto& [node, e] : node_attributed) {
    NodeSummary& n = nodes[node];
    n.node = node;
    n.attributed_static = nanojoules_to_joules(e.static_energy());
    n.attributed_dynamic = nanojoules_to_joules(e.dynamic());
  }
  for (auto& [node, n] : nodes) {
    n.unattributed_static = std::max(0.0, n.static_total - n.attributed_static);
    n.dynamic_residual = n.dynamic_total - n.attributed_dynamic;
    out.nodes.push_back(n);
  }
  return out;
}

std::vector<HistogramGroup> energy_histogram(const TaskRollup& rollup) {
  std::map<std::string, HistogramGroup> groups;
  for (const PhysicalTask& task : rollup.physical) {
    HistogramGroup& g = groups[task.task];
    g.task = task.task;
    g.total += task.energy.total();
    g.entries.push_back(HistogramEntry{task.uid, task.energy.total()});
  }
  std::vector<HistogramGroup> out;
  for (auto& [name, g] : groups) {
    std::sort(g.entries.begin(), g.entries.end(),
              [](const HistogramEntry& a, const HistogramEntry& b) {
                return std::tie(a.energy, a.uid) < std::tie(b.energy, b.uid);
              });
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace peak
