#include "peak/trace.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "peak/counters.hpp"

namespace peak {

bool TraceHeader::has_domain(Domain domain) const {
  return std::find(domains.begin(), domains.end(), domain) != domains.end();
}

std::uint64_t TraceHeader::wrap_for(Domain domain) const {
  auto it = wrap_uj.find(domain);
  return it == wrap_uj.end() ? default_wrap_microjoules(domain) : it->second;
}

Timestamp event_time(const TraceEvent& event) {
  return std::visit(
      [](const auto& e) -> Timestamp {
        if constexpr (std::is_same_v<std::decay_t<decltype(e)>, IdleMark>) {
          return e.start;
        } else {
          return e.t;
        }
      },
      event);
}

namespace {

TraceHeader parse_header(const TaggedLine& line) {
  if (line.tag() != kTraceTag) {
    line.fail(fmt::format("expected '{}' header, got '{}'", kTraceTag, line.tag()));
  }
  TraceHeader h;
  h.version = static_cast<int>(line.integer("version"));
  if (h.version != kTraceVersion) {
    line.fail(fmt::format("unsupported trace version {}", h.version));
  }
  h.nodes = line.str_list("nodes");
  if (h.nodes.empty()) line.fail("header lists no nodes");
  h.sockets = static_cast<unsigned>(line.unsigned_integer("sockets"));
  if (h.sockets == 0) line.fail("header declares zero sockets");
  for (const std::string& d : line.str_list("domains")) {
    try {
      h.domains.push_back(parse_domain(d));
    } catch (const DomainError& e) {
      line.fail(e.what());
    }
  }
  if (!h.has_domain(Domain::CpuPackage)) line.fail("header must include the pkg domain");
  for (Domain d : h.domains) {
    const std::string key = fmt::format("wrap_{}", to_string(d));
    const std::int64_t wrap = line.has(key) ? line.micros(key)
                                            : static_cast<std::int64_t>(default_wrap_microjoules(d));
    if (wrap <= 0) line.fail(fmt::format("{} must be positive", key));
    h.wrap_uj[d] = static_cast<std::uint64_t>(wrap);
  }
  h.tick = line.time("tick");
  if (h.tick.count() <= 0) line.fail("tick must be positive");
  h.cpu_tick_seconds = line.real("cpu_tick");
  if (!(h.cpu_tick_seconds > 0.0)) line.fail("cpu_tick must be positive");
  return h;
}

const std::string& known_node(const TaggedLine& line, const TraceHeader& h) {
  const std::string& node = line.str("node");
  if (std::find(h.nodes.begin(), h.nodes.end(), node) == h.nodes.end()) {
    line.fail(fmt::format("node '{}' is not declared in the header", node));
  }
  return node;
}

Timestamp non_negative_time(const TaggedLine& line, std::string_view key) {
  const Timestamp t = line.time(key);
  if (t.count() < 0) line.fail(fmt::format("{} must not be negative", key));
  return t;
}

TraceEvent parse_event(const TaggedLine& line, const TraceHeader& h) {
  const std::string& tag = line.tag();
  if (tag == "rapl") {
    RaplReading r;
    r.t = non_negative_time(line, "t");
    r.node = known_node(line, h);
    r.socket = static_cast<unsigned>(line.unsigned_integer("socket"));
    if (r.socket >= h.sockets) line.fail(fmt::format("socket {} out of range", r.socket));
    try {
      r.domain = parse_domain(line.str("domain"));
    } catch (const DomainError& e) {
      line.fail(e.what());
    }
    if (!h.has_domain(r.domain)) {
      line.fail(fmt::format("domain {} is not declared in the header", to_string(r.domain)));
    }
    const std::int64_t energy = line.micros("energy");
    if (energy < 0) line.fail("energy must not be negative");
    r.energy_uj = static_cast<std::uint64_t>(energy);
    if (r.energy_uj >= h.wrap_for(r.domain)) {
      line.fail(fmt::format("counter value {} reaches the wrap constant {}",
                            format_micros(energy),
                            format_micros(static_cast<std::int64_t>(h.wrap_for(r.domain)))));
    }
    return r;
  }
  if (tag == "proc") {
    ProcRecord p;
    p.t = non_negative_time(line, "t");
    p.node = known_node(line, h);
    p.pid = line.integer("pid");
    p.cpu_ticks = line.unsigned_list("cpu");
    p.rss_bytes = line.unsigned_list("rss");
    if (p.cpu_ticks.size() != h.sockets || p.rss_bytes.size() != h.sockets) {
      line.fail(fmt::format("cpu and rss need {} per-socket values", h.sockets));
    }
    p.cgroup = line.str_or("cgroup", "");
    return p;
  }
  if (tag == "pod") {
    return PodSeen{non_negative_time(line, "t"), line.str("uid"), line.str_or("name", ""),
                   line.str("task"), known_node(line, h)};
  }
  if (tag == "podgone") {
    return PodGone{non_negative_time(line, "t"), line.str("uid")};
  }
  if (tag == "idle") {
    IdleMark m{non_negative_time(line, "start"), non_negative_time(line, "end"),
               known_node(line, h)};
    if (m.end <= m.start) line.fail("idle window must have positive length");
    return m;
  }
  if (tag == "segment") {
    return SegmentMark{non_negative_time(line, "t"), line.str("label")};
  }
  line.fail(fmt::format("unknown record tag '{}'", tag));
}

}  // namespace

Trace parse_trace(std::istream& in) {
  Trace trace;
  std::string text;
  std::size_t line_no = 0;
  bool have_header = false;
  Timestamp last{0};
  while (std::getline(in, text)) {
    ++line_no;
    auto line = TaggedLine::parse(text, line_no);
    if (!line) continue;
    if (!have_header) {
      trace.header = parse_header(*line);
      have_header = true;
      continue;
    }
    TraceEvent event = parse_event(*line, trace.header);
    const Timestamp t = event_time(event);
    if (t < last) {
      line->fail(fmt::format("timestamp {} is earlier than the previous event ({})",
                             format_micros(t.count()), format_micros(last.count())));
    }
    last = t;
    trace.events.push_back(std::move(event));
  }
  if (!have_header) throw TaggedLineError(line_no, "trace has no header line");
  return trace;
}

Trace parse_trace(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_trace(in);
}

Trace read_trace_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("cannot open trace {}", path.string()));
  return parse_trace(in);
}

namespace {

std::string join(const std::vector<std::uint64_t>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += fmt::format("{}", values[i]);
  }
  return out;
}

struct EventWriter {
  std::ostream& out;

  void operator()(const RaplReading& r) const {
    LineWriter w("rapl");
    w.add_time("t", r.t).add("node", r.node).add("socket", r.socket)
        .add("domain", to_string(r.domain))
        .add_micros("energy", static_cast<std::int64_t>(r.energy_uj));
    out << w.str() << '\n';
  }
  void operator()(const ProcRecord& p) const {
    LineWriter w("proc");
    w.add_time("t", p.t).add("node", p.node).add("pid", p.pid)
        .add("cpu", join(p.cpu_ticks)).add("rss", join(p.rss_bytes));
    if (!p.cgroup.empty()) w.add("cgroup", p.cgroup);
    out << w.str() << '\n';
  }
  void operator()(const PodSeen& p) const {
    LineWriter w("pod");
    w.add_time("t", p.t).add("uid", p.uid);
    if (!p.name.empty()) w.add("name", p.name);
    w.add("task", p.task).add("node", p.node);
    out << w.str() << '\n';
  }
  void operator()(const PodGone& p) const {
    out << LineWriter("podgone").add_time("t", p.t).add("uid", p.uid).str() << '\n';
  }
  void operator()(const IdleMark& m) const {
    out << LineWriter("idle").add("node", m.node).add_time("start", m.start)
               .add_time("end", m.end).str() << '\n';
  }
  void operator()(const SegmentMark& s) const {
    out << LineWriter("segment").add_time("t", s.t).add("label", s.label).str() << '\n';
  }
};

}  // namespace

void write_trace(std::ostream& out, const Trace& trace) {
  const TraceHeader& h = trace.header;
  LineWriter header(kTraceTag);
  std::string nodes;
  for (const std::string& n : h.nodes) nodes += (nodes.empty() ? "" : ",") + n;
  std::string domains;
  for (Domain d : h.domains) {
    domains += std::string(domains.empty() ? "" : ",") + std::string(to_string(d));
  }
  header.add("version", h.version).add("nodes", nodes).add("sockets", h.sockets)
      .add("domains", domains);
  for (Domain d : h.domains) {
    header.add_micros(fmt::format("wrap_{}", to_string(d)),
                      static_cast<std::int64_t>(h.wrap_for(d)));
  }
  header.add_time("tick", h.tick).add("cpu_tick", h.cpu_tick_seconds);
  out << header.str() << '\n';
  for (const TraceEvent& event : trace.events) std::visit(EventWriter{out}, event);
}

std::string format_trace(const Trace& trace) {
  std::ostringstream out;
  write_trace(out, trace);
  return out.str();
}

void write_trace_file(const std::filesystem::path& path, const Trace& trace) {
  std::ofstream out(path);
  if (!out) throw Error(fmt::format("cannot write trace {}", path.string()));
  write_trace(out, trace);
  if (!out) throw Error(fmt::format("failed writing trace {}", path.string()));
}

}  // namespace peak
