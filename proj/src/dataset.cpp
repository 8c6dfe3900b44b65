#include "peak/dataset.hpp"

#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <set>

#include <fmt/format.h>

namespace peak {

namespace fs = std::filesystem;

namespace {

void each_line(std::istream& in, const std::function<void(const TaggedLine&)>& fn) {
  std::string text;
  std::size_t line_no = 0;
  while (std::getline(in, text)) {
    if (auto line = TaggedLine::parse(text, ++line_no)) fn(*line);
  }
}

Domain domain_field(const TaggedLine& line) {
  try {
    return parse_domain(line.str("domain"));
  } catch (const DomainError& e) {
    line.fail(e.what());
  }
}

unsigned socket_field(const TaggedLine& line) {
  return static_cast<unsigned>(line.unsigned_integer("socket"));
}

}  // namespace

void write_static(std::ostream& out, const RawDataset& data) {
  const RunInfo& r = data.run;
  out << LineWriter("run")
             .add("gamma", r.gamma)
             .add("mode", to_string(r.mode))
             .add("rapl_ms", r.rapl_interval_ms)
             .add("poll_ms", r.poll_interval_ms)
             .add_time("start", r.start)
             .add_time("stop", r.stop)
             .str()
      << '\n';
  for (const auto& [key, sp] : data.profile.entries) {
    out << LineWriter("static")
               .add("node", key.socket.node)
               .add("socket", key.socket.socket)
               .add("domain", to_string(key.domain))
               .add("watts", sp.watts)
               .add("over", sp.measured_over)
               .add_time("at", sp.measured_at)
               .str()
        << '\n';
  }
  for (const auto& [node, domain] : data.unavailable_domains) {
    out << LineWriter("unavailable").add("node", node).add("domain", to_string(domain)).str()
        << '\n';
  }
  const MonitorCounters& c = data.counters;
  out << LineWriter("counters")
             .add("clamps", std::uint64_t{c.clamps})
             .add("gaps", std::uint64_t{c.gaps})
             .add("pod_failures", std::uint64_t{c.pod_source_failures})
             .add("unreadable", std::uint64_t{c.unreadable_metadata})
             .add("pid_reuses", std::uint64_t{c.pid_reuses})
             .add("conflicts", std::uint64_t{c.binding_conflicts})
             .str()
      << '\n';
  for (const SegmentMark& s : data.segments) {
    out << LineWriter("segment").add_time("t", s.t).add("label", s.label).str() << '\n';
  }
}

void read_static(std::istream& in, RawDataset& data) {
  each_line(in, [&](const TaggedLine& line) {
    const std::string& tag = line.tag();
    if (tag == "run") {
      data.run.gamma = line.real("gamma");
      try {
        data.run.mode = parse_attribution_mode(line.str("mode"));
      } catch (const ConfigError& e) {
        line.fail(e.what());
      }
      data.run.rapl_interval_ms = line.integer("rapl_ms");
      data.run.poll_interval_ms = line.integer("poll_ms");
      data.run.start = line.time("start");
      data.run.stop = line.time("stop");
    } else if (tag == "static") {
      LedgerKey key{SocketId{line.str("node"), socket_field(line)}, domain_field(line)};
      data.profile.entries[key] =
          StaticPower{line.real("watts"), line.real("over"), line.time("at")};
    } else if (tag == "unavailable") {
      data.unavailable_domains.emplace_back(line.str("node"), domain_field(line));
    } else if (tag == "counters") {
      MonitorCounters& c = data.counters;
      c.clamps = line.unsigned_integer("clamps");
      c.gaps = line.unsigned_integer("gaps");
      c.pod_source_failures = line.unsigned_integer("pod_failures");
      c.unreadable_metadata = line.unsigned_integer("unreadable");
      c.pid_reuses = line.unsigned_integer("pid_reuses");
      c.binding_conflicts = line.unsigned_integer("conflicts");
    } else if (tag == "segment") {
      data.segments.push_back(SegmentMark{line.time("t"), line.str("label")});
    } else {
      line.fail(fmt::format("unknown record tag '{}'", tag));
    }
  });
}

void write_pods(std::ostream& out, const RawDataset& data) {
  for (const PodBinding& pod : data.pods) {
    out << LineWriter("pod")
               .add("uid", pod.uid)
               .add("name", pod.name)
               .add("task", pod.task)
               .add("node", pod.node)
               .add_time("first", pod.first_seen)
               .add_time("last", pod.last_seen)
               .add("open", pod.open ? 1 : 0)
               .str()
        << '\n';
    for (const PidBinding& b : pod.pids) {
      LineWriter w("bind");
      w.add("uid", pod.uid).add("node", b.node).add("pid", b.pid).add("instance", b.instance)
          .add_time("from", b.from);
      if (b.until) w.add_time("until", *b.until);
      out << w.str() << '\n';
    }
  }
}

void read_pods(std::istream& in, RawDataset& data) {
  std::map<std::string, std::size_t> index;
  each_line(in, [&](const TaggedLine& line) {
    if (line.tag() == "pod") {
      PodBinding pod;
      pod.uid = line.str("uid");
      pod.name = line.str_or("name", "");
      pod.task = line.str("task");
      pod.node = line.str("node");
      pod.first_seen = line.time("first");
      pod.last_seen = line.time("last");
      pod.open = line.integer("open") != 0;
      if (!index.emplace(pod.uid, data.pods.size()).second) {
        line.fail(fmt::format("duplicate pod '{}'", pod.uid));
      }
      data.pods.push_back(std::move(pod));
    } else if (line.tag() == "bind") {
      auto it = index.find(line.str("uid"));
      if (it == index.end()) line.fail("binding refers to an unknown pod");
      PidBinding b;
      b.node = line.str("node");
      b.pid = line.integer("pid");
      b.instance = static_cast<unsigned>(line.unsigned_integer("instance"));
      b.from = line.time("from");
      if (line.has("until")) b.until = line.time("until");
      data.pods[it->second].pids.push_back(std::move(b));
    } else {
      line.fail(fmt::format("unknown record tag '{}'", line.tag()));
    }
  });
}

void write_ledgers(std::ostream& out, const RawDataset& data) {
  for (const NodeLedger& nl : data.ledgers) {
    const IntervalLedger& l = nl.ledger;
    out << LineWriter("ledger")
               .add("node", nl.node)
               .add("interval", std::uint64_t{nl.interval})
               .add_time("start", l.start)
               .add_time("end", l.end)
               .str()
        << '\n';
    for (const auto& [key, e] : l.energy) {
      out << LineWriter("energy")
                 .add("node", nl.node)
                 .add("interval", std::uint64_t{nl.interval})
                 .add("socket", key.socket.socket)
                 .add("domain", to_string(key.domain))
                 .add("total", e.total)
                 .add("static", e.static_energy)
                 .add("dynamic", e.dynamic)
                 .add("clamped_by", e.clamped_by)
                 .str()
          << '\n';
    }
    std::set<SocketId> sockets;
    for (const auto& [s, v] : l.cpu_time_total) sockets.insert(s);
    for (const auto& [s, v] : l.memory_total) sockets.insert(s);
    for (const SocketId& s : sockets) {
      auto cpu = l.cpu_time_total.find(s);
      auto mem = l.memory_total.find(s);
      out << LineWriter("totals")
                 .add("node", nl.node)
                 .add("interval", std::uint64_t{nl.interval})
                 .add("socket", s.socket)
                 .add("cpu", cpu == l.cpu_time_total.end() ? 0.0 : cpu->second)
                 .add("mem", mem == l.memory_total.end() ? 0.0 : mem->second)
                 .str()
          << '\n';
    }
  }
  for (const IntervalGap& g : data.gaps) {
    out << LineWriter("gap")
               .add("node", g.node)
               .add("interval", std::uint64_t{g.interval})
               .add_time("start", g.start)
               .add_time("end", g.end)
               .add("reason", g.reason)
               .str()
        << '\n';
  }
}

void read_ledgers(std::istream& in, RawDataset& data) {
  std::map<std::pair<std::string, std::size_t>, std::size_t> index;
  auto ledger_for = [&](const TaggedLine& line) -> NodeLedger& {
    auto it = index.find({line.str("node"), line.unsigned_integer("interval")});
    if (it == index.end()) line.fail("line refers to an interval with no ledger record");
    return data.ledgers[it->second];
  };
  each_line(in, [&](const TaggedLine& line) {
    const std::string& tag = line.tag();
    if (tag == "ledger") {
      NodeLedger nl;
      nl.node = line.str("node");
      nl.interval = line.unsigned_integer("interval");
      nl.ledger.start = line.time("start");
      nl.ledger.end = line.time("end");
      if (!index.emplace(std::pair{nl.node, nl.interval}, data.ledgers.size()).second) {
        line.fail("duplicate ledger record");
      }
      data.ledgers.push_back(std::move(nl));
    } else if (tag == "energy") {
      NodeLedger& nl = ledger_for(line);
      LedgerKey key{SocketId{nl.node, socket_field(line)}, domain_field(line)};
      nl.ledger.energy[key] = DomainEnergy{line.real("total"), line.real("static"),
                                           line.real("dynamic"), line.real("clamped_by")};
    } else if (tag == "totals") {
      NodeLedger& nl = ledger_for(line);
      const SocketId s{nl.node, socket_field(line)};
      nl.ledger.cpu_time_total[s] = line.real("cpu");
      nl.ledger.memory_total[s] = line.real("mem");
    } else if (tag == "gap") {
      data.gaps.push_back(IntervalGap{line.str("node"), line.unsigned_integer("interval"),
                                      line.time("start"), line.time("end"),
                                      line.str("reason")});
    } else {
      line.fail(fmt::format("unknown record tag '{}'", tag));
    }
  });
}

void write_records(std::ostream& out, const std::vector<AttributionRecord>& records) {
  for (const AttributionRecord& r : records) {
    out << LineWriter("record")
               .add("node", r.node)
               .add("interval", std::uint64_t{r.interval})
               .add_time("start", r.start)
               .add_time("end", r.end)
               .add("pid", r.pid)
               .add("instance", r.instance)
               .add("cpu_dynamic", r.cpu_dynamic)
               .add("cpu_static", r.cpu_static)
               .add("dram_dynamic", r.dram_dynamic)
               .add("dram_static", r.dram_static)
               .str()
        << '\n';
  }
}

std::vector<AttributionRecord> read_records(std::istream& in) {
  std::vector<AttributionRecord> out;
  each_line(in, [&](const TaggedLine& line) {
    if (line.tag() != "record") line.fail(fmt::format("unknown record tag '{}'", line.tag()));
    AttributionRecord r;
    r.node = line.str("node");
    r.interval = line.unsigned_integer("interval");
    r.start = line.time("start");
    r.end = line.time("end");
    r.pid = line.integer("pid");
    r.instance = static_cast<unsigned>(line.unsigned_integer("instance"));
    r.cpu_dynamic = line.real("cpu_dynamic");
    r.cpu_static = line.real("cpu_static");
    r.dram_dynamic = line.real("dram_dynamic");
    r.dram_static = line.real("dram_static");
    out.push_back(std::move(r));
  });
  return out;
}

void write_dataset(const fs::path& dir, const RawDataset& data) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DatasetError(fmt::format("cannot create {}: {}", dir.string(), ec.message()));

  auto write_file = [&](const char* name, const auto& writer) {
    const fs::path path = dir / name;
    std::ofstream out(path);
    if (!out) throw DatasetError(fmt::format("cannot write {}", path.string()));
    writer(out);
    if (!out) throw DatasetError(fmt::format("failed writing {}", path.string()));
  };
  write_file(kStaticFile, [&](std::ostream& o) { write_static(o, data); });
  write_file(kPodsFile, [&](std::ostream& o) { write_pods(o, data); });
  write_file(kLedgersFile, [&](std::ostream& o) { write_ledgers(o, data); });
  write_file(kRecordsFile, [&](std::ostream& o) { write_records(o, data.records); });
}

RawDataset read_dataset(const fs::path& dir) {
  RawDataset data;
  auto read_file = [&](const char* name, const auto& reader) {
    const fs::path path = dir / name;
    std::ifstream in(path);
    if (!in) throw DatasetError(fmt::format("cannot open {}", path.string()));
    try {
      reader(in);
    } catch (const TaggedLineError& e) {
      throw DatasetError(fmt::format("{}: {}", path.string(), e.what()));
    }
  };
  read_file(kStaticFile, [&](std::istream& i) { read_static(i, data); });
  read_file(kPodsFile, [&](std::istream& i) { read_pods(i, data); });
  read_file(kLedgersFile, [&](std::istream& i) { read_ledgers(i, data); });
  read_file(kRecordsFile, [&](std::istream& i) { data.records = read_records(i); });
  return data;
}

}  // namespace peak
