#include "peak/generator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "peak/counters.hpp"
#include "peak/tagged_line.hpp"

namespace peak {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------- parsing

namespace {

template <typename T>
T field(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ScenarioError(fmt::format("{}: missing '{}'", where, key));
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ScenarioError(fmt::format("{}: '{}' has the wrong type", where, key));
  }
}

template <typename T>
T field_or(const json& j, const char* key, T fallback, const std::string& where) {
  return j.contains(key) ? field<T>(j, key, where) : fallback;
}

std::map<Domain, double> domain_map(const json& j, const char* key, const std::string& where) {
  std::map<Domain, double> out;
  if (!j.contains(key)) return out;
  if (!j.at(key).is_object()) throw ScenarioError(fmt::format("{}: '{}' must be an object", where, key));
  for (const auto& [name, value] : j.at(key).items()) {
    try {
      out[parse_domain(name)] = value.get<double>();
    } catch (const DomainError& e) {
      throw ScenarioError(fmt::format("{}: {}", where, e.what()));
    } catch (const json::exception&) {
      throw ScenarioError(fmt::format("{}: '{}.{}' must be a number", where, key, name));
    }
  }
  return out;
}

}  // namespace

Scenario parse_scenario(std::string_view text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ScenarioError(fmt::format("scenario is not valid JSON: {}", e.what()));
  }
  if (!root.is_object()) throw ScenarioError("scenario must be a JSON object");

  Scenario s;
  const std::string top = "scenario";
  s.seed = field_or<std::uint64_t>(root, "seed", s.seed, top);
  s.gamma = field_or(root, "gamma", s.gamma, top);
  s.tick = field_or(root, "tick_s", s.tick, top);
  s.cpu_tick = field_or(root, "cpu_tick_s", s.cpu_tick, top);
  s.idle = field_or(root, "idle_s", s.idle, top);
  s.end = field<double>(root, "end_s", top);
  s.noise = field_or(root, "noise", s.noise, top);
  s.cgroup_style = field_or<std::string>(root, "cgroup_style", s.cgroup_style, top);
  if (root.contains("domains")) {
    s.domains.clear();
    for (const std::string& d : field<std::vector<std::string>>(root, "domains", top)) {
      try {
        s.domains.push_back(parse_domain(d));
      } catch (const DomainError& e) {
        throw ScenarioError(fmt::format("scenario: {}", e.what()));
      }
    }
  }
  for (const auto& [d, joules] : domain_map(root, "wrap_j", top)) {
    s.wrap_uj[d] = static_cast<std::uint64_t>(std::llround(joules * 1e6));
  }

  if (!root.contains("nodes") || !root["nodes"].is_array()) {
    throw ScenarioError("scenario: 'nodes' must be an array");
  }
  for (std::size_t i = 0; i < root["nodes"].size(); ++i) {
    const json& j = root["nodes"][i];
    const std::string where = fmt::format("nodes[{}]", i);
    ScenarioNode n;
    n.name = field<std::string>(j, "name", where);
    n.sockets = field_or(j, "sockets", n.sockets, where);
    n.cores_per_socket = field_or(j, "cores_per_socket", n.cores_per_socket, where);
    n.static_watts = domain_map(j, "static_w", where);
    n.dynamic_max_watts = domain_map(j, "dynamic_max_w", where);
    n.memory_bytes = field_or(j, "memory_bytes", n.memory_bytes, where);
    n.initial_joules = domain_map(j, "initial_j", where);
    s.nodes.push_back(std::move(n));
  }
  if (root.contains("pods")) {
    for (std::size_t i = 0; i < root["pods"].size(); ++i) {
      const json& j = root["pods"][i];
      const std::string where = fmt::format("pods[{}]", i);
      ScenarioPod p;
      p.uid = field<std::string>(j, "uid", where);
      p.name = field<std::string>(j, "name", where);
      p.task = field<std::string>(j, "task", where);
      p.node = field<std::string>(j, "node", where);
      p.start = field<double>(j, "start_s", where);
      if (j.contains("end_s")) p.end = field<double>(j, "end_s", where);
      s.pods.push_back(std::move(p));
    }
  }
  if (root.contains("processes")) {
    for (std::size_t i = 0; i < root["processes"].size(); ++i) {
      const json& j = root["processes"][i];
      const std::string where = fmt::format("processes[{}]", i);
      ScenarioProcess p;
      p.pid = field<Pid>(j, "pid", where);
      p.node = field<std::string>(j, "node", where);
      p.start = field<double>(j, "start_s", where);
      p.end = field<double>(j, "end_s", where);
      if (j.contains("pod")) p.pod = field<std::string>(j, "pod", where);
      if (j.contains("load")) {
        for (std::size_t k = 0; k < j["load"].size(); ++k) {
          const json& step = j["load"][k];
          const std::string at = fmt::format("{}.load[{}]", where, k);
          p.load.push_back(LoadStep{field<double>(step, "at_s", at),
                                    field<std::vector<double>>(step, "cpu", at),
                                    field_or<std::vector<double>>(step, "rss", {}, at)});
        }
      }
      s.processes.push_back(std::move(p));
    }
  }
  if (root.contains("segments")) {
    for (std::size_t i = 0; i < root["segments"].size(); ++i) {
      const json& j = root["segments"][i];
      const std::string where = fmt::format("segments[{}]", i);
      s.segments.push_back(
          ScenarioSegment{field<double>(j, "at_s", where), field<std::string>(j, "label", where)});
    }
  }
  return s;
}

Scenario load_scenario(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError(fmt::format("cannot open scenario {}", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

// ---------------------------------------------------------------- generation

namespace {

class Grid {
 public:
  Grid(double tick) : tick_(tick), tick_us_(seconds_to_timestamp(tick)) {
    if (!(tick > 0.0) || tick_us_.count() <= 0) throw ScenarioError("tick_s must be positive");
  }

  std::int64_t index(double seconds, const std::string& what) const {
    const double k = seconds / tick_;
    const double r = std::round(k);
    if (std::fabs(k - r) > 1e-6) {
      throw ScenarioError(fmt::format("{} = {} s is not on the {} s tick grid", what, seconds, tick_));
    }
    return static_cast<std::int64_t>(r);
  }
  Timestamp at(std::int64_t k) const { return tick_us_ * k; }

 private:
  double tick_;
  Timestamp tick_us_;
};

struct ProcPlan {
  const ScenarioProcess* spec;
  std::int64_t start_k;
  std::int64_t end_k;
  std::vector<std::int64_t> step_k;
  std::vector<std::uint64_t> cum_ticks;
  std::string cgroup;
};

struct CounterState {
  double cum_joules = 0.0;
  std::int64_t cum_uj = 0;
  std::uint64_t offset_uj = 0;
  std::uint64_t wrap_uj = 0;
};

double credit(double share, double gamma) {
  return share <= 0.0 ? 0.0 : std::pow(share, gamma);
}

std::string cgroup_path(const std::string& style, const std::optional<std::string>& pod,
                        Pid pid) {
  if (!pod) return fmt::format("/system.slice/worker-{}.service", pid);
  if (style == "systemd") {
    std::string uid = *pod;
    std::replace(uid.begin(), uid.end(), '-', '_');
    return fmt::format(
        "/kubepods.slice/kubepods-burstable.slice/kubepods-burstable-pod{}.slice/"
        "cri-containerd-{:012x}.scope",
        uid, static_cast<std::uint64_t>(pid));
  }
  return fmt::format("/kubepods/burstable/pod{}/{:012x}", *pod, static_cast<std::uint64_t>(pid));
}

const LoadStep* step_at(const ProcPlan& p, std::int64_t k) {
  const LoadStep* current = nullptr;
  for (std::size_t i = 0; i < p.step_k.size(); ++i) {
    if (p.step_k[i] <= k) current = &p.spec->load[i];
  }
  return current;
}

void validate(const Scenario& s) {
  if (!(s.gamma >= 0.0 && s.gamma <= 1.0)) {
    throw ScenarioError(fmt::format("gamma {} is outside [0, 1]", s.gamma));
  }
  if (!(s.cpu_tick > 0.0)) throw ScenarioError("cpu_tick_s must be positive");
  if (!(s.idle > 0.0) || !(s.end > s.idle)) {
    throw ScenarioError("need 0 < idle_s < end_s");
  }
  if (!(s.noise >= 0.0 && s.noise < 1.0)) throw ScenarioError("noise must lie in [0, 1)");
  if (s.nodes.empty()) throw ScenarioError("scenario has no nodes");
  if (std::find(s.domains.begin(), s.domains.end(), Domain::CpuPackage) == s.domains.end()) {
    throw ScenarioError("domains must include pkg");
  }
  if (s.cgroup_style != "cgroupfs" && s.cgroup_style != "systemd") {
    throw ScenarioError(fmt::format("unknown cgroup_style '{}'", s.cgroup_style));
  }
  std::set<std::string> names;
  for (const ScenarioNode& n : s.nodes) {
    if (!names.insert(n.name).second) throw ScenarioError(fmt::format("duplicate node '{}'", n.name));
    if (n.sockets != s.nodes.front().sockets || n.sockets == 0) {
      throw ScenarioError("every node needs the same, non-zero socket count");
    }
    if (n.cores_per_socket == 0 || !(n.memory_bytes > 0.0)) {
      throw ScenarioError(fmt::format("node '{}' needs cores and memory", n.name));
    }
    for (Domain d : s.domains) {
      for (const auto* m : {&n.static_watts, &n.dynamic_max_watts}) {
        auto it = m->find(d);
        if (it != m->end() && !(it->second >= 0.0)) {
          throw ScenarioError(fmt::format("node '{}' has negative power", n.name));
        }
      }
    }
  }
  std::set<std::string> uids;
  for (const ScenarioPod& p : s.pods) {
    if (!uids.insert(p.uid).second) throw ScenarioError(fmt::format("duplicate pod '{}'", p.uid));
    if (!names.contains(p.node)) {
      throw ScenarioError(fmt::format("pod '{}' runs on unknown node '{}'", p.uid, p.node));
    }
  }
  std::set<std::pair<std::string, Pid>> pids;
  for (const ScenarioProcess& p : s.processes) {
    if (!names.contains(p.node)) {
      throw ScenarioError(fmt::format("process {} runs on unknown node '{}'", p.pid, p.node));
    }
    if (p.pid <= 0 || !pids.insert({p.node, p.pid}).second) {
      throw ScenarioError(fmt::format("pid {} is invalid or repeated on node '{}'", p.pid, p.node));
    }
    if (p.pod && !uids.contains(*p.pod)) {
      throw ScenarioError(fmt::format("process {} names unknown pod '{}'", p.pid, *p.pod));
    }
    if (!(p.end > p.start)) throw ScenarioError(fmt::format("process {} has no lifetime", p.pid));
    for (const LoadStep& step : p.load) {
      if (step.cpu.size() != s.nodes.front().sockets ||
          (!step.rss.empty() && step.rss.size() != s.nodes.front().sockets)) {
        throw ScenarioError(fmt::format("process {}: load needs one value per socket", p.pid));
      }
      for (double u : step.cpu) {
        if (!(u >= 0.0 && u <= 1.0)) {
          throw ScenarioError(fmt::format("process {}: share {} is outside [0, 1]", p.pid, u));
        }
      }
      for (double r : step.rss) {
        if (!(r >= 0.0)) throw ScenarioError(fmt::format("process {}: negative rss", p.pid));
      }
    }
  }
}

}  // namespace

std::map<std::string, double> GroundTruth::segment_betas() const {
  std::map<std::string, double> out;
  for (const TruthSpan& s : segments) out[s.label] = s.beta();
  return out;
}

GeneratedTrace generate_trace(const Scenario& s) {
  validate(s);
  const Grid grid(s.tick);
  const std::int64_t idle_k = grid.index(s.idle, "idle_s");
  const std::int64_t end_k = grid.index(s.end, "end_s");
  const unsigned sockets = s.nodes.front().sockets;

  GeneratedTrace out;
  TraceHeader& h = out.trace.header;
  for (const ScenarioNode& n : s.nodes) h.nodes.push_back(n.name);
  h.sockets = sockets;
  h.domains = s.domains;
  for (Domain d : s.domains) {
    auto it = s.wrap_uj.find(d);
    h.wrap_uj[d] = it == s.wrap_uj.end() ? default_wrap_microjoules(d) : it->second;
  }
  h.tick = grid.at(1);
  h.cpu_tick_seconds = s.cpu_tick;

  std::map<std::string, std::vector<ProcPlan>> plans;
  for (const ScenarioProcess& p : s.processes) {
    ProcPlan plan{&p, grid.index(p.start, fmt::format("process {} start_s", p.pid)),
                  grid.index(p.end, fmt::format("process {} end_s", p.pid)), {},
                  std::vector<std::uint64_t>(sockets, 0), cgroup_path(s.cgroup_style, p.pod, p.pid)};
    for (const LoadStep& step : p.load) {
      plan.step_k.push_back(grid.index(step.at, fmt::format("process {} load at_s", p.pid)));
    }
    plans[p.node].push_back(std::move(plan));
  }
  for (auto& [node, list] : plans) {
    std::sort(list.begin(), list.end(),
              [](const ProcPlan& a, const ProcPlan& b) { return a.spec->pid < b.spec->pid; });
  }

  std::map<LedgerKey, CounterState> counters;
  for (const ScenarioNode& n : s.nodes) {
    for (unsigned sock = 0; sock < sockets; ++sock) {
      for (Domain d : s.domains) {
        CounterState c;
        c.wrap_uj = h.wrap_uj[d];
        auto init = n.initial_joules.find(d);
        const double joules = init == n.initial_joules.end() ? 0.0 : init->second;
        c.offset_uj = static_cast<std::uint64_t>(std::llround(std::max(0.0, joules) * 1e6)) % c.wrap_uj;
        counters[{SocketId{n.name, sock}, d}] = c;
      }
    }
  }

  std::vector<std::pair<std::int64_t, const ScenarioSegment*>> segments;
  for (const ScenarioSegment& seg : s.segments) {
    segments.emplace_back(grid.index(seg.at, fmt::format("segment '{}' at_s", seg.label)), &seg);
  }
  std::stable_sort(segments.begin(), segments.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });

  GroundTruth& truth = out.truth;
  truth.gamma = s.gamma;
  truth.monitored = TruthSpan{"monitored", grid.at(idle_k), grid.at(end_k), 0, 0, 0, 0};
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const std::int64_t seg_end = i + 1 < segments.size() ? segments[i + 1].first : end_k;
    truth.segments.push_back(TruthSpan{segments[i].second->label, grid.at(segments[i].first),
                                       grid.at(seg_end), 0, 0, 0, 0});
  }
  std::map<std::tuple<std::string, Pid, Domain>, TruthEntry> entries;

  std::mt19937_64 rng(s.seed);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  std::vector<TraceEvent>& events = out.trace.events;

  for (const ScenarioNode& n : s.nodes) {
    events.push_back(IdleMark{grid.at(0), grid.at(idle_k), n.name});
  }

  for (std::int64_t k = 0; k <= end_k; ++k) {
    const Timestamp t = grid.at(k);
    for (const auto& [seg_k, seg] : segments) {
      if (seg_k == k) events.push_back(SegmentMark{t, seg->label});
    }
    for (const ScenarioPod& p : s.pods) {
      if (grid.index(p.start, "pod start_s") == k) {
        events.push_back(PodSeen{t, p.uid, p.name, p.task, p.node});
      }
      if (p.end && grid.index(*p.end, "pod end_s") == k) events.push_back(PodGone{t, p.uid});
    }

    const bool monitored = k >= 1 && k - 1 >= idle_k;
    std::vector<TruthSpan*> spans;
    if (monitored) {
      spans.push_back(&truth.monitored);
      for (std::size_t i = 0; i < segments.size(); ++i) {
        if (grid.at(k - 1) >= truth.segments[i].start && grid.at(k - 1) < truth.segments[i].end) {
          spans.push_back(&truth.segments[i]);
        }
      }
    }

    for (const ScenarioNode& n : s.nodes) {
      std::vector<ProcPlan>& procs = plans[n.name];
      // Utilization and memory over the interval (k-1, k].
      std::vector<std::vector<double>> used(procs.size(), std::vector<double>(sockets, 0.0));
      std::vector<std::vector<double>> rss(procs.size(), std::vector<double>(sockets, 0.0));
      if (k >= 1) {
        for (std::size_t i = 0; i < procs.size(); ++i) {
          ProcPlan& p = procs[i];
          if (p.start_k > k - 1 || p.end_k < k) continue;
          const LoadStep* step = step_at(p, k - 1);
          if (!step) continue;
          for (unsigned sock = 0; sock < sockets; ++sock) {
            const auto ticks = static_cast<std::uint64_t>(std::llround(
                step->cpu[sock] * n.cores_per_socket * s.tick / s.cpu_tick));
            p.cum_ticks[sock] += ticks;
            used[i][sock] = static_cast<double>(ticks) * s.cpu_tick /
                            (static_cast<double>(n.cores_per_socket) * s.tick);
            if (!step->rss.empty()) rss[i][sock] = step->rss[sock];
          }
        }
      }

      for (unsigned sock = 0; sock < sockets; ++sock) {
        for (Domain d : s.domains) {
          std::vector<double> share(procs.size(), 0.0);
          double sum = 0.0;
          for (std::size_t i = 0; i < procs.size(); ++i) {
            share[i] = d == Domain::CpuPackage ? used[i][sock] : rss[i][sock];
            sum += share[i];
          }
          const double load = d == Domain::CpuPackage ? sum : sum / n.memory_bytes;
          if (load > 1.0 + 1e-9) {
            throw ScenarioError(fmt::format(
                "{} of socket {} on node '{}' is oversubscribed ({}) in the interval ending at {} s",
                d == Domain::CpuPackage ? "CPU" : "memory", sock, n.name, load, to_seconds(t)));
          }
          auto pmax = n.dynamic_max_watts.find(d);
          auto pstatic = n.static_watts.find(d);
          const double dynamic_w = pmax == n.dynamic_max_watts.end()
                                       ? 0.0
                                       : pmax->second * credit(std::min(load, 1.0), s.gamma);
          const double static_w = pstatic == n.static_watts.end() ? 0.0 : pstatic->second;

          CounterState& c = counters[{SocketId{n.name, sock}, d}];
          const std::int64_t before = c.cum_uj;
          if (k >= 1) {
            double increment = (static_w + dynamic_w) * s.tick;
            if (s.noise > 0.0) increment = std::max(0.0, increment * (1.0 + s.noise * uniform(rng)));
            c.cum_joules += increment;
            c.cum_uj = std::llround(c.cum_joules * 1e6);
          }

          if (monitored) {
            const double dynamic_j = dynamic_w * s.tick;
            std::vector<double> credits(procs.size(), 0.0);
            double pod_credit = 0.0;
            double other_credit = 0.0;
            for (std::size_t i = 0; i < procs.size(); ++i) {
              credits[i] = sum > 0.0 ? credit(share[i] / sum, s.gamma) : 0.0;
              (procs[i].spec->pod ? pod_credit : other_credit) += credits[i];
            }
            const double norm = std::max(1.0, pod_credit);
            double workflow = 0.0;
            for (std::size_t i = 0; i < procs.size(); ++i) {
              if (!procs[i].spec->pod || credits[i] == 0.0) continue;
              const double e = dynamic_j * credits[i] / norm;
              workflow += e;
              TruthEntry& entry = entries[{n.name, procs[i].spec->pid, d}];
              entry = TruthEntry{n.name, procs[i].spec->pid, d, entry.dynamic + e, procs[i].spec->pod};
            }
            const double residual = dynamic_j - workflow;
            for (std::size_t i = 0; i < procs.size(); ++i) {
              if (procs[i].spec->pod || credits[i] == 0.0) continue;
              TruthEntry& entry = entries[{n.name, procs[i].spec->pid, d}];
              entry = TruthEntry{n.name, procs[i].spec->pid, d,
                                 entry.dynamic + residual * credits[i] / other_credit, std::nullopt};
            }
            if (other_credit == 0.0 && residual != 0.0) {
              TruthEntry& entry = entries[{n.name, 0, d}];
              entry = TruthEntry{n.name, 0, d, entry.dynamic + residual, std::nullopt};
            }
            const double measured = static_cast<double>(c.cum_uj - before) / 1e6;
            for (TruthSpan* span : spans) {
              span->measured += measured;
              span->static_energy += static_w * s.tick;
              span->workflow_dynamic += workflow;
            }
          }

          events.push_back(RaplReading{
              t, n.name, sock, d,
              (c.offset_uj + static_cast<std::uint64_t>(c.cum_uj)) % c.wrap_uj});
        }
      }

      for (std::size_t i = 0; i < procs.size(); ++i) {
        const ProcPlan& p = procs[i];
        if (k < p.start_k || k > p.end_k) continue;
        std::vector<std::uint64_t> rss_bytes(sockets, 0);
        for (unsigned sock = 0; sock < sockets; ++sock) {
          rss_bytes[sock] = static_cast<std::uint64_t>(std::llround(rss[i][sock]));
        }
        events.push_back(ProcRecord{t, n.name, p.spec->pid, p.cum_ticks, rss_bytes, p.cgroup});
      }
    }
  }

  for (TruthSpan* span : [&] {
         std::vector<TruthSpan*> all{&truth.monitored};
         for (TruthSpan& seg : truth.segments) all.push_back(&seg);
         return all;
       }()) {
    span->other_dynamic = span->measured - span->static_energy - span->workflow_dynamic;
  }
  for (auto& [key, entry] : entries) truth.entries.push_back(entry);
  return out;
}

// ---------------------------------------------------------------- truth file

namespace {

void write_span(std::ostream& out, const char* tag, const TruthSpan& s) {
  out << LineWriter(tag)
             .add("label", s.label)
             .add_time("start", s.start)
             .add_time("end", s.end)
             .add("measured", s.measured)
             .add("static", s.static_energy)
             .add("workflow_dynamic", s.workflow_dynamic)
             .add("other_dynamic", s.other_dynamic)
             .add("beta", s.beta())
             .str()
      << '\n';
}

TruthSpan read_span(const TaggedLine& line) {
  return TruthSpan{line.str("label"),           line.time("start"),
                   line.time("end"),            line.real("measured"),
                   line.real("static"),         line.real("workflow_dynamic"),
                   line.real("other_dynamic")};
}

}  // namespace

void write_truth(std::ostream& out, const GroundTruth& truth) {
  out << LineWriter("truth").add("gamma", truth.gamma).str() << '\n';
  write_span(out, "span", truth.monitored);
  for (const TruthSpan& s : truth.segments) write_span(out, "segment", s);
  for (const TruthEntry& e : truth.entries) {
    LineWriter w("energy");
    w.add("node", e.node).add("pid", e.pid).add("domain", to_string(e.domain))
        .add("dynamic", e.dynamic);
    if (e.pod) w.add("pod", *e.pod);
    out << w.str() << '\n';
  }
}

GroundTruth read_truth(std::istream& in) {
  GroundTruth truth;
  std::string text;
  std::size_t line_no = 0;
  while (std::getline(in, text)) {
    auto line = TaggedLine::parse(text, ++line_no);
    if (!line) continue;
    if (line->tag() == "truth") {
      truth.gamma = line->real("gamma");
    } else if (line->tag() == "span") {
      truth.monitored = read_span(*line);
    } else if (line->tag() == "segment") {
      truth.segments.push_back(read_span(*line));
    } else if (line->tag() == "energy") {
      TruthEntry e;
      e.node = line->str("node");
      e.pid = line->integer("pid");
      try {
        e.domain = parse_domain(line->str("domain"));
      } catch (const DomainError& err) {
        line->fail(err.what());
      }
      e.dynamic = line->real("dynamic");
      if (line->has("pod")) e.pod = line->str("pod");
      truth.entries.push_back(std::move(e));
    } else {
      line->fail(fmt::format("unknown record tag '{}'", line->tag()));
    }
  }
  return truth;
}

GroundTruth read_truth_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("cannot open ground truth {}", path.string()));
  return read_truth(in);
}

void write_truth_file(const fs::path& path, const GroundTruth& truth) {
  std::ofstream out(path);
  if (!out) throw Error(fmt::format("cannot write ground truth {}", path.string()));
  write_truth(out, truth);
}

// ---------------------------------------------------------------- scenarios

namespace {

ScenarioNode reference_node(const std::string& name, unsigned sockets) {
  ScenarioNode n;
  n.name = name;
  n.sockets = sockets;
  n.cores_per_socket = 16;
  n.static_watts = {{Domain::CpuPackage, 35.0}, {Domain::Dram, 4.0}};
  n.dynamic_max_watts = {{Domain::CpuPackage, 110.0}, {Domain::Dram, 14.0}};
  n.memory_bytes = 64e9;
  return n;
}

std::string pod_uid(std::uint64_t n) {
  return fmt::format("{:08x}-{:04x}-4{:03x}-8{:03x}-{:012x}", 0x5eed0000u + n, n & 0xffff,
                     (n * 7) & 0xfff, (n * 13) & 0xfff, 0xabc000000000ull + n);
}

}  // namespace

Scenario staircase_scenario(double gamma, double background, double step_seconds) {
  Scenario s;
  s.gamma = gamma;
  s.tick = 1.0;
  s.idle = 30.0;
  const int steps = 11;
  s.end = s.idle + steps * step_seconds;
  s.nodes.push_back(reference_node("node-a", 2));
  s.pods.push_back(ScenarioPod{pod_uid(1), "nf-staircase-1", "STAIRCASE", "node-a", s.idle, {}});

  const double room = 1.0 - background;
  ScenarioProcess up{1001, "node-a", s.idle, s.end, pod_uid(1), {}};
  ScenarioProcess down{1002, "node-a", s.idle, s.end, pod_uid(1), {}};
  for (int i = 0; i < steps; ++i) {
    const double at = s.idle + i * step_seconds;
    const double rising = 0.1 * i * room;
    const double falling = 0.1 * (steps - 1 - i) * room;
    up.load.push_back(LoadStep{at, {rising, 0.0}, {2e9 * i, 0.0}});
    down.load.push_back(LoadStep{at, {0.0, falling}, {0.0, 2e9 * (steps - 1 - i)}});
  }
  ScenarioProcess bg{500, "node-a", s.idle, s.end, std::nullopt,
                     {LoadStep{s.idle, {background, background}, {6e9, 6e9}}}};
  s.processes = {bg, up, down};
  return s;
}

Scenario colocated_load_scenario(double gamma, double extra) {
  Scenario s;
  s.gamma = gamma;
  s.tick = 1.0;
  s.idle = 30.0;
  const std::vector<double> pattern = {0.2, 0.45, 0.3, 0.6, 0.1};
  const double step = 20.0;
  const double phase = step * static_cast<double>(pattern.size());
  const double background = 0.1;
  s.end = s.idle + 2 * phase;
  s.nodes.push_back(reference_node("node-a", 1));
  s.pods.push_back(ScenarioPod{pod_uid(2), "nf-workload-1", "WORKLOAD", "node-a", s.idle, {}});
  s.segments = {ScenarioSegment{s.idle, "isolated"}, ScenarioSegment{s.idle + phase, "load"}};

  ScenarioProcess wf{2001, "node-a", s.idle, s.end, pod_uid(2), {}};
  ScenarioProcess coload{3001, "node-a", s.idle + phase, s.end, std::nullopt, {}};
  for (int rep = 0; rep < 2; ++rep) {
    for (std::size_t i = 0; i < pattern.size(); ++i) {
      const double at = s.idle + rep * phase + step * static_cast<double>(i);
      wf.load.push_back(LoadStep{at, {pattern[i]}, {3e9}});
      if (rep == 1) {
        coload.load.push_back(LoadStep{at, {extra * (pattern[i] + background)}, {0.0}});
      }
    }
  }
  ScenarioProcess bg{500, "node-a", s.idle, s.end, std::nullopt,
                     {LoadStep{s.idle, {background}, {4e9}}}};
  s.processes = {bg, wf, coload};
  return s;
}

Scenario short_task_scenario(std::size_t tasks, std::uint64_t seed) {
  Scenario s;
  s.seed = seed;
  s.gamma = 0.3;
  s.tick = 1.0;
  s.idle = 30.0;
  s.nodes.push_back(reference_node("node-a", 1));
  s.domains = {Domain::CpuPackage};
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> length(5, 9);
  std::uniform_real_distribution<double> load(0.05, 0.25);
  const std::vector<std::string> names = {"FORCE_PREPROCESS", "FORCE_HIGHER_LEVEL", "MERGE",
                                          "CHECK_RESULTS"};
  double last_end = s.idle;
  for (std::size_t i = 0; i < tasks; ++i) {
    const double start = s.idle + 3.0 * static_cast<double>(i);
    const double end = start + length(rng);
    const std::string uid = pod_uid(100 + i);
    s.pods.push_back(ScenarioPod{uid, fmt::format("nf-{:08x}", 0x1000u + i),
                                 names[i % names.size()], "node-a", start, end});
    s.processes.push_back(ScenarioProcess{static_cast<Pid>(10000 + i), "node-a", start, end, uid,
                                          {LoadStep{start, {load(rng)}, {1e9}}}});
    last_end = std::max(last_end, end);
  }
  s.processes.push_back(ScenarioProcess{500, "node-a", s.idle, last_end + 1.0, std::nullopt,
                                        {LoadStep{s.idle, {0.1}, {2e9}}}});
  s.end = last_end + 1.0;
  return s;
}

Scenario random_scenario(std::uint64_t seed, std::size_t intervals) {
  std::mt19937_64 rng(seed);
  auto uniform = [&](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };

  Scenario s;
  s.seed = seed;
  s.gamma = uniform(0.1, 0.9);
  s.tick = 1.0;
  s.idle = 10.0;
  s.end = s.idle + static_cast<double>(intervals);
  s.noise = 0.05;
  const unsigned sockets = static_cast<unsigned>(pick(1, 2));
  ScenarioNode n = reference_node("node-r", sockets);
  n.initial_joules = {
      {Domain::CpuPackage, microjoules_to_joules(kPackageWrapMicrojoules) - uniform(0.0, 3000.0)},
      {Domain::Dram, microjoules_to_joules(kDramWrapMicrojoules) - uniform(0.0, 300.0)}};
  s.nodes.push_back(n);

  const int count = pick(1, 5);
  const bool background = count > 1 && pick(0, 1) == 1;
  for (int i = 0; i < count; ++i) {
    const bool bound = !(background && i == 0);
    std::optional<std::string> pod;
    if (bound) {
      const std::string uid = pod_uid(seed * 16 + static_cast<std::uint64_t>(i));
      s.pods.push_back(ScenarioPod{uid, fmt::format("nf-r{}-{}", seed, i), fmt::format("TASK_{}", i % 3),
                                   "node-r", s.idle, {}});
      pod = uid;
    }
    ScenarioProcess p{static_cast<Pid>(2000 + 17 * i), "node-r", s.idle, s.end, pod, {}};
    double at = s.idle;
    while (at < s.end) {
      LoadStep step{at, {}, {}};
      for (unsigned sock = 0; sock < sockets; ++sock) {
        step.cpu.push_back(pick(0, 9) == 0 ? 0.0 : uniform(0.0, 1.0 / count));
        step.rss.push_back(uniform(1e8, 4e9));
      }
      p.load.push_back(std::move(step));
      at += pick(1, 10);
    }
    s.processes.push_back(std::move(p));
  }
  return s;
}

}  // namespace peak
