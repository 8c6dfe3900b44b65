#pragma once

// Report rendering. A report is a list of named sections with fixed columns;
// the same sections render as an aligned table, as comma-delimited text or as
// tagged lines.
//
// Delimited layout: each section starts with a "#<section>,<columns...>" row
// followed by "<section>,<values...>" rows. Energies are printed as joules
// with nine decimals, which is exact for the nanojoule totals.

#include <string>
#include <string_view>
#include <vector>

#include "peak/rollup.hpp"

namespace peak {

enum class ReportFormat { Table, Delimited, Tagged };

std::string_view to_string(ReportFormat format);
// "table", "csv" or "tagged"; throws ConfigError otherwise.
ReportFormat parse_report_format(std::string_view text);

class ReportParseError : public Error {
 public:
  using Error::Error;
};

struct ReportSection {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

std::string render_sections(const std::vector<ReportSection>& sections, ReportFormat format);

std::string format_nanojoules(std::int64_t nj);
std::optional<std::int64_t> parse_nanojoules(std::string_view text);

std::vector<ReportSection> rollup_sections(const TaskRollup& rollup);
std::string render_report(const TaskRollup& rollup, ReportFormat format);
// Inverse of the delimited rendering.
TaskRollup parse_delimited_report(std::string_view text);

std::vector<ReportSection> histogram_sections(const std::vector<HistogramGroup>& groups);

}  // namespace peak
