#pragma once

// Brute-force reference attribution computed straight from trace events,
// without the monitor, backend or ledger code. Used to cross-check replay.
//
// Assumes every interval boundary carries a full set of counter readings and
// a process scan, and that intervals are consecutive counter timestamps after
// the idle window.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <variant>
#include <vector>

#include "peak/trace.hpp"

namespace oracle {

struct Energy {
  double cpu_dynamic = 0.0;
  double cpu_static = 0.0;
  double dram_dynamic = 0.0;
  double dram_static = 0.0;

  double dynamic() const { return cpu_dynamic + dram_dynamic; }
  double total() const { return cpu_dynamic + cpu_static + dram_dynamic + dram_static; }
};

using ProcessKey = std::pair<std::string, peak::Pid>;

struct Options {
  double gamma = 0.3;
  bool linear = false;  // plain share instead of share^gamma
};

namespace detail {

using Key = std::tuple<std::string, unsigned, peak::Domain>;

inline std::uint64_t unwrap(std::uint64_t a, std::uint64_t b, std::uint64_t wrap) {
  return b >= a ? b - a : (wrap - a) + b;
}

inline double credit(double share, const Options& o) {
  if (o.linear) return share;
  if (share <= 0.0) return 0.0;
  return std::pow(share, o.gamma);
}

}  // namespace detail

inline std::map<ProcessKey, Energy> attribute(const peak::Trace& trace, const Options& options) {
  using namespace peak;
  using detail::Key;

  std::map<std::string, IdleMark> idle;
  std::map<Key, std::map<Timestamp, std::uint64_t>> counters;
  std::map<std::string, std::map<Timestamp, std::map<Pid, const ProcRecord*>>> scans;
  for (const TraceEvent& ev : trace.events) {
    if (const auto* r = std::get_if<RaplReading>(&ev)) {
      counters[{r->node, r->socket, r->domain}][r->t] = r->energy_uj;
    } else if (const auto* p = std::get_if<ProcRecord>(&ev)) {
      scans[p->node][p->t][p->pid] = p;
    } else if (const auto* m = std::get_if<IdleMark>(&ev)) {
      idle[m->node] = *m;
    }
  }

  // Idle power per counter: unwrapped increments over the window divided by
  // the time between its first and last reading.
  std::map<Key, double> idle_watts;
  for (const auto& [key, series] : counters) {
    const IdleMark& mark = idle.at(std::get<0>(key));
    const std::uint64_t wrap = trace.header.wrap_for(std::get<2>(key));
    std::uint64_t sum = 0;
    Timestamp first{-1};
    Timestamp last{};
    std::uint64_t prev = 0;
    for (const auto& [t, uj] : series) {
      if (t < mark.start || t > mark.end) continue;
      if (first.count() < 0) {
        first = t;
      } else {
        sum += detail::unwrap(prev, uj, wrap);
      }
      prev = uj;
      last = t;
    }
    idle_watts[key] = (static_cast<double>(sum) / 1e6) / to_seconds(last - first);
  }

  std::map<ProcessKey, Energy> out;
  for (const auto& [node, by_time] : scans) {
    const Timestamp begin = idle.at(node).end;
    std::vector<Timestamp> bounds;
    for (const auto& [t, unused] : by_time) {
      if (t >= begin) bounds.push_back(t);
    }
    for (std::size_t k = 1; k < bounds.size(); ++k) {
      const Timestamp t0 = bounds[k - 1];
      const Timestamp t1 = bounds[k];
      const double seconds = to_seconds(t1 - t0);
      const auto& before = by_time.at(t0);
      const auto& after = by_time.at(t1);

      for (unsigned s = 0; s < trace.header.sockets; ++s) {
        // Shares of this socket's CPU time and end-of-interval memory.
        std::map<Pid, double> cpu;
        std::map<Pid, double> mem;
        double cpu_sum = 0.0;
        double mem_sum = 0.0;
        for (const auto& [pid, rec] : after) {
          std::uint64_t ticks = rec->cpu_ticks.at(s);
          auto it = before.find(pid);
          if (it != before.end() && it->second->cpu_ticks.at(s) <= ticks) {
            ticks -= it->second->cpu_ticks.at(s);
          }
          cpu[pid] = static_cast<double>(ticks);
          mem[pid] = static_cast<double>(rec->rss_bytes.at(s));
          cpu_sum += cpu[pid];
          mem_sum += mem[pid];
        }

        for (Domain domain : trace.header.domains) {
          const Key key{node, s, domain};
          const auto& series = counters.at(key);
          const std::uint64_t delta = detail::unwrap(series.at(t0), series.at(t1),
                                                     trace.header.wrap_for(domain));
          const double total = static_cast<double>(delta) / 1e6;
          const double stat = idle_watts.at(key) * seconds;
          const double dyn = total > stat ? total - stat : 0.0;
          const bool is_cpu = domain == Domain::CpuPackage;
          const auto& used = is_cpu ? cpu : mem;
          const double sum = is_cpu ? cpu_sum : mem_sum;
          for (const auto& [pid, amount] : used) {
            const double share = sum > 0.0 ? amount / sum : 0.0;
            Energy& e = out[{node, pid}];
            const double d = dyn * detail::credit(share, options);
            const double st = stat * share;
            if (is_cpu) {
              e.cpu_dynamic += d;
              e.cpu_static += st;
            } else {
              e.dram_dynamic += d;
              e.dram_static += st;
            }
          }
        }
      }
    }
  }
  return out;
}

// Pids whose cgroup path names a pod listed in the trace.
inline std::set<ProcessKey> pod_processes(const peak::Trace& trace) {
  using namespace peak;
  std::vector<std::string> uids;
  for (const TraceEvent& ev : trace.events) {
    if (const auto* p = std::get_if<PodSeen>(&ev)) uids.push_back(p->uid);
  }
  std::set<ProcessKey> out;
  for (const TraceEvent& ev : trace.events) {
    const auto* p = std::get_if<ProcRecord>(&ev);
    if (p == nullptr) continue;
    for (std::string uid : uids) {
      bool hit = p->cgroup.find(uid) != std::string::npos;
      for (char& c : uid) {
        if (c == '-') c = '_';
      }
      hit = hit || p->cgroup.find(uid) != std::string::npos;
      if (hit) out.insert({p->node, p->pid});
    }
  }
  return out;
}

inline bool rel_close(double a, double b, double rel) {
  const double scale = std::max(std::abs(a), std::abs(b));
  if (scale == 0.0) return true;
  return std::abs(a - b) <= rel * scale;
}

}  // namespace oracle
