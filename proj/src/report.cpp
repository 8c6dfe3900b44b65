#include "peak/report.hpp"

#include <algorithm>
#include <charconv>
#include <map>

#include <fmt/format.h>

namespace peak {

std::string_view to_string(ReportFormat format) {
  switch (format) {
    case ReportFormat::Table:
      return "table";
    case ReportFormat::Delimited:
      return "csv";
    case ReportFormat::Tagged:
      return "tagged";
  }
  return "table";
}

ReportFormat parse_report_format(std::string_view text) {
  if (text == "table") return ReportFormat::Table;
  if (text == "csv") return ReportFormat::Delimited;
  if (text == "tagged") return ReportFormat::Tagged;
  throw ConfigError(fmt::format("unknown report format '{}' (expected table, csv or tagged)", text));
}

std::string format_nanojoules(std::int64_t nj) {
  const bool negative = nj < 0;
  const std::uint64_t magnitude =
      negative ? 0 - static_cast<std::uint64_t>(nj) : static_cast<std::uint64_t>(nj);
  return fmt::format("{}{}.{:09}", negative ? "-" : "", magnitude / 1000000000,
                     magnitude % 1000000000);
}

std::optional<std::int64_t> parse_nanojoules(std::string_view text) {
  bool negative = false;
  if (!text.empty() && text.front() == '-') {
    negative = true;
    text.remove_prefix(1);
  }
  const auto dot = text.find('.');
  if (dot == std::string_view::npos || dot == 0 || text.size() - dot - 1 != 9) {
    return std::nullopt;
  }
  std::int64_t whole = 0;
  std::int64_t frac = 0;
  auto [p1, e1] = std::from_chars(text.data(), text.data() + dot, whole);
  auto [p2, e2] = std::from_chars(text.data() + dot + 1, text.data() + text.size(), frac);
  if (e1 != std::errc{} || p1 != text.data() + dot || e2 != std::errc{} ||
      p2 != text.data() + text.size() || whole > 9'000'000'000) {
    return std::nullopt;
  }
  const std::int64_t value = whole * 1'000'000'000 + frac;
  return negative ? -value : value;
}

namespace {

std::string csv_field(const std::string& value) {
  if (value.find_first_of(",\"\n") == std::string::npos) return value;
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::optional<std::vector<std::string>> csv_split(std::string_view line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"' && field.empty() && !was_quoted) {
      quoted = was_quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(field));
      field.clear();
      was_quoted = false;
    } else {
      field += c;
    }
  }
  if (quoted) return std::nullopt;
  out.push_back(std::move(field));
  return out;
}

std::string render_table(const std::vector<ReportSection>& sections) {
  std::string out;
  bool first = true;
  for (const ReportSection& s : sections) {
    if (!first) out += '\n';
    first = false;
    std::vector<std::size_t> width(s.columns.size());
    for (std::size_t c = 0; c < s.columns.size(); ++c) width[c] = s.columns[c].size();
    for (const auto& row : s.rows) {
      for (std::size_t c = 0; c < row.size() && c < width.size(); ++c) {
        width[c] = std::max(width[c], row[c].size());
      }
    }
    auto emit = [&](const std::vector<std::string>& cells) {
      std::string line;
      for (std::size_t c = 0; c < cells.size(); ++c) {
        if (c) line += "  ";
        line += c + 1 == cells.size() ? cells[c] : fmt::format("{:<{}}", cells[c], width[c]);
      }
      out += line + '\n';
    };
    out += fmt::format("[{}]\n", s.name);
    emit(s.columns);
    for (const auto& row : s.rows) emit(row);
  }
  return out;
}

std::string render_delimited(const std::vector<ReportSection>& sections) {
  std::string out;
  for (const ReportSection& s : sections) {
    out += '#' + s.name;
    for (const std::string& c : s.columns) out += ',' + csv_field(c);
    out += '\n';
    for (const auto& row : s.rows) {
      out += s.name;
      for (const std::string& v : row) out += ',' + csv_field(v);
      out += '\n';
    }
  }
  return out;
}

std::string render_tagged(const std::vector<ReportSection>& sections) {
  std::string out;
  for (const ReportSection& s : sections) {
    std::string header = "# " + s.name;
    for (const std::string& c : s.columns) header += ' ' + c;
    out += header + '\n';
    for (const auto& row : s.rows) {
      LineWriter w(s.name);
      for (std::size_t c = 0; c < row.size() && c < s.columns.size(); ++c) {
        w.add(s.columns[c], row[c]);
      }
      out += w.str() + '\n';
    }
  }
  return out;
}

const std::vector<std::string> kEnergyColumns = {"cpu_dynamic_j", "cpu_static_j",
                                                 "dram_dynamic_j", "dram_static_j", "total_j"};

void append_energy(std::vector<std::string>& row, const EnergyBreakdown& e) {
  row.push_back(format_nanojoules(e.cpu_dynamic));
  row.push_back(format_nanojoules(e.cpu_static));
  row.push_back(format_nanojoules(e.dram_dynamic));
  row.push_back(format_nanojoules(e.dram_static));
  row.push_back(format_nanojoules(e.total()));
}

std::vector<std::string> with_energy(std::vector<std::string> columns) {
  columns.insert(columns.end(), kEnergyColumns.begin(), kEnergyColumns.end());
  return columns;
}

}  // namespace

std::string render_sections(const std::vector<ReportSection>& sections, ReportFormat format) {
  switch (format) {
    case ReportFormat::Table:
      return render_table(sections);
    case ReportFormat::Delimited:
      return render_delimited(sections);
    case ReportFormat::Tagged:
      return render_tagged(sections);
  }
  return {};
}

std::vector<ReportSection> rollup_sections(const TaskRollup& r) {
  std::vector<ReportSection> out;

  ReportSection physical{"physical",
                         with_energy({"uid", "name", "task", "node", "start", "end",
                                      "duration_s", "short_task", "records"}),
                         {}};
  for (const PhysicalTask& t : r.physical) {
    std::vector<std::string> row{t.uid,
                                 t.name,
                                 t.task,
                                 t.node,
                                 format_micros(t.start.count()),
                                 format_micros(t.end.count()),
                                 format_micros((t.end - t.start).count()),
                                 t.short_task ? "yes" : "no",
                                 std::to_string(t.records)};
    append_energy(row, t.energy);
    physical.rows.push_back(std::move(row));
  }
  out.push_back(std::move(physical));

  ReportSection logical{"logical", with_energy({"task", "physical_tasks"}), {}};
  for (const LogicalTask& t : r.logical) {
    std::vector<std::string> row{t.task, std::to_string(t.physical_tasks)};
    append_energy(row, t.energy);
    logical.rows.push_back(std::move(row));
  }
  out.push_back(std::move(logical));

  ReportSection workflow{"workflow", with_energy({"mode", "gamma", "records"}), {}};
  workflow.columns.push_back("static_j");
  if (!r.physical.empty() || r.workflow.records > 0) {
    std::vector<std::string> row{std::string(to_string(r.mode)), format_double(r.gamma),
                                 std::to_string(r.workflow.records)};
    append_energy(row, r.workflow.energy);
    row.push_back(format_nanojoules(r.workflow.energy.static_energy()));
    workflow.rows.push_back(std::move(row));
  }
  out.push_back(std::move(workflow));

  ReportSection unassigned{"unassigned", with_energy({"records"}), {}};
  if (r.unassigned.records > 0) {
    std::vector<std::string> row{std::to_string(r.unassigned.records)};
    append_energy(row, r.unassigned.energy);
    unassigned.rows.push_back(std::move(row));
  }
  out.push_back(std::move(unassigned));

  ReportSection nodes{"node",
                      {"node", "rapl_pkg_j", "rapl_dram_j", "static_j", "attributed_static_j",
                       "unattributed_static_j", "dynamic_j", "attributed_dynamic_j",
                       "dynamic_residual_j", "over_attributed", "intervals", "gaps"},
                      {}};
  for (const NodeSummary& n : r.nodes) {
    nodes.rows.push_back({n.node, format_double(n.rapl_pkg), format_double(n.rapl_dram),
                          format_double(n.static_total), format_double(n.attributed_static),
                          format_double(n.unattributed_static), format_double(n.dynamic_total),
                          format_double(n.attributed_dynamic),
                          format_double(n.dynamic_residual), n.over_attributed() ? "yes" : "no",
                          std::to_string(n.intervals), std::to_string(n.gaps)});
  }
  out.push_back(std::move(nodes));
  return out;
}

std::string render_report(const TaskRollup& rollup, ReportFormat format) {
  return render_sections(rollup_sections(rollup), format);
}

namespace {

class RowReader {
 public:
  RowReader(const std::vector<std::string>& columns, const std::vector<std::string>& values,
            std::size_t line)
      : columns_(columns), values_(values), line_(line) {
    if (values.size() != columns.size()) {
      fail(fmt::format("expected {} fields, got {}", columns.size(), values.size()));
    }
  }

  const std::string& str(std::string_view column) const {
    for (std::size_t i = 0; i < columns_.size(); ++i) {
      if (columns_[i] == column) return values_[i];
    }
    fail(fmt::format("missing column '{}'", column));
  }
  std::int64_t nanojoules(std::string_view column) const {
    auto v = parse_nanojoules(str(column));
    if (!v) fail(fmt::format("column '{}' is not an energy: '{}'", column, str(column)));
    return *v;
  }
  std::size_t count(std::string_view column) const {
    const std::string& s = str(column);
    std::size_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) {
      fail(fmt::format("column '{}' is not a count: '{}'", column, s));
    }
    return v;
  }
  double real(std::string_view column) const {
    const std::string& s = str(column);
    double v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) {
      fail(fmt::format("column '{}' is not a number: '{}'", column, s));
    }
    return v;
  }
  Timestamp time(std::string_view column) const {
    auto v = parse_micros(str(column));
    if (!v) fail(fmt::format("column '{}' is not a time: '{}'", column, str(column)));
    return Timestamp{*v};
  }
  bool flag(std::string_view column) const {
    const std::string& s = str(column);
    if (s != "yes" && s != "no") fail(fmt::format("column '{}' must be yes or no", column));
    return s == "yes";
  }
  EnergyBreakdown energy() const {
    EnergyBreakdown e{nanojoules("cpu_dynamic_j"), nanojoules("cpu_static_j"),
                      nanojoules("dram_dynamic_j"), nanojoules("dram_static_j")};
    if (e.total() != nanojoules("total_j")) fail("total_j does not match its components");
    return e;
  }

  [[noreturn]] void fail(const std::string& message) const {
    throw ReportParseError(fmt::format("line {}: {}", line_, message));
  }

 private:
  const std::vector<std::string>& columns_;
  const std::vector<std::string>& values_;
  std::size_t line_;
};

}  // namespace

TaskRollup parse_delimited_report(std::string_view text) {
  TaskRollup out;
  std::map<std::string, std::vector<std::string>> headers;
  std::size_t line_no = 0;
  for (std::string_view raw : split(text, '\n')) {
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
    if (raw.empty()) continue;
    auto cells = csv_split(raw);
    if (!cells || cells->empty()) {
      throw ReportParseError(fmt::format("line {}: unbalanced quotes", line_no));
    }
    std::string section = std::move(cells->front());
    cells->erase(cells->begin());
    if (!section.empty() && section.front() == '#') {
      headers[section.substr(1)] = std::move(*cells);
      continue;
    }
    auto h = headers.find(section);
    if (h == headers.end()) {
      throw ReportParseError(
          fmt::format("line {}: row for section '{}' before its header", line_no, section));
    }
    const RowReader row(h->second, *cells, line_no);
    if (section == "physical") {
      PhysicalTask t;
      t.uid = row.str("uid");
      t.name = row.str("name");
      t.task = row.str("task");
      t.node = row.str("node");
      t.start = row.time("start");
      t.end = row.time("end");
      t.short_task = row.flag("short_task");
      t.records = row.count("records");
      t.energy = row.energy();
      out.physical.push_back(std::move(t));
    } else if (section == "logical") {
      out.logical.push_back(
          LogicalTask{row.str("task"), row.count("physical_tasks"), row.energy()});
    } else if (section == "workflow") {
      try {
        out.mode = parse_attribution_mode(row.str("mode"));
      } catch (const ConfigError& e) {
        row.fail(e.what());
      }
      out.gamma = row.real("gamma");
      out.workflow = BucketTotals{row.count("records"), row.energy()};
    } else if (section == "unassigned") {
      out.unassigned = BucketTotals{row.count("records"), row.energy()};
    } else if (section == "node") {
      NodeSummary n;
      n.node = row.str("node");
      n.rapl_pkg = row.real("rapl_pkg_j");
      n.rapl_dram = row.real("rapl_dram_j");
      n.static_total = row.real("static_j");
      n.attributed_static = row.real("attributed_static_j");
      n.unattributed_static = row.real("unattributed_static_j");
      n.dynamic_total = row.real("dynamic_j");
      n.attributed_dynamic = row.real("attributed_dynamic_j");
      n.dynamic_residual = row.real("dynamic_residual_j");
      n.intervals = row.count("intervals");
      n.gaps = row.count("gaps");
      out.nodes.push_back(std::move(n));
    } else {
      row.fail(fmt::format("unknown section '{}'", section));
    }
  }
  return out;
}

std::vector<ReportSection> histogram_sections(const std::vector<HistogramGroup>& groups) {
  ReportSection s{"histogram", {"task", "uid", "energy_j", "task_total_j"}, {}};
  for (const HistogramGroup& g : groups) {
    for (const HistogramEntry& e : g.entries) {
      s.rows.push_back(
          {g.task, e.uid, format_nanojoules(e.energy), format_nanojoules(g.total)});
    }
  }
  return {s};
}

}  // namespace peak
