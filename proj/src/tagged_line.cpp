#include "peak/tagged_line.hpp"

#include <charconv>
#include <cstdlib>
#include <limits>

#include <fmt/format.h>

namespace peak {

TaggedLineError::TaggedLineError(std::size_t line, const std::string& message)
    : Error(fmt::format("line {}: {}", line, message)), line_(line) {}

std::vector<std::string_view> split(std::string_view text, char separator) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(separator, start);
    out.push_back(text.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

namespace {

// Values are percent-escaped so they never contain whitespace.
bool needs_escape(char c) {
  return c == '%' || c == ' ' || c == '\t' || c == '\n' || c == '\r';
}

std::optional<std::string> unescape(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '%') {
      out += text[i];
      continue;
    }
    if (i + 2 >= text.size()) return std::nullopt;
    unsigned value = 0;
    auto [ptr, ec] = std::from_chars(text.data() + i + 1, text.data() + i + 3, value, 16);
    if (ec != std::errc{} || ptr != text.data() + i + 3) return std::nullopt;
    out += static_cast<char>(value);
    i += 2;
  }
  return out;
}

}  // namespace

std::optional<TaggedLine> TaggedLine::parse(std::string_view text,
                                            std::size_t line_no) {
  while (!text.empty() && (text.back() == '\r' || text.back() == ' ')) {
    text.remove_suffix(1);
  }
  std::size_t i = 0;
  while (i < text.size() && (text[i] == ' ' || text[i] == '\t')) ++i;
  if (i == text.size() || text[i] == '#') return std::nullopt;

  TaggedLine line;
  line.line_no_ = line_no;
  bool first = true;
  while (i < text.size()) {
    std::size_t j = i;
    while (j < text.size() && text[j] != ' ' && text[j] != '\t') ++j;
    const std::string_view token = text.substr(i, j - i);
    if (first) {
      line.tag_ = std::string(token);
      first = false;
    } else {
      const auto eq = token.find('=');
      if (eq == std::string_view::npos || eq == 0) {
        throw TaggedLineError(line_no, fmt::format("expected key=value, got '{}'", token));
      }
      auto value = unescape(token.substr(eq + 1));
      if (!value) {
        throw TaggedLineError(line_no, fmt::format("bad escape sequence in '{}'", token));
      }
      const std::string key(token.substr(0, eq));
      if (line.has(key)) {
        throw TaggedLineError(line_no, fmt::format("field '{}' appears twice", key));
      }
      line.fields_.emplace_back(key, std::move(*value));
    }
    i = j;
    while (i < text.size() && (text[i] == ' ' || text[i] == '\t')) ++i;
  }
  return line;
}

bool TaggedLine::has(std::string_view key) const {
  for (const auto& [k, v] : fields_) {
    if (k == key) return true;
  }
  return false;
}

void TaggedLine::fail(const std::string& message) const {
  throw TaggedLineError(line_no_, message);
}

const std::string& TaggedLine::str(std::string_view key) const {
  for (const auto& [k, v] : fields_) {
    if (k == key) return v;
  }
  fail(fmt::format("'{}' record lacks field '{}'", tag_, key));
}

std::string TaggedLine::str_or(std::string_view key, std::string_view fallback) const {
  for (const auto& [k, v] : fields_) {
    if (k == key) return v;
  }
  return std::string(fallback);
}

std::int64_t TaggedLine::integer(std::string_view key) const {
  const std::string& v = str(key);
  std::int64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) {
    fail(fmt::format("field '{}' is not an integer: '{}'", key, v));
  }
  return out;
}

std::uint64_t TaggedLine::unsigned_integer(std::string_view key) const {
  const std::string& v = str(key);
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) {
    fail(fmt::format("field '{}' is not a non-negative integer: '{}'", key, v));
  }
  return out;
}

double TaggedLine::real(std::string_view key) const {
  const std::string& v = str(key);
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) {
    fail(fmt::format("field '{}' is not a number: '{}'", key, v));
  }
  return out;
}

std::int64_t TaggedLine::micros(std::string_view key) const {
  const std::string& v = str(key);
  auto out = parse_micros(v);
  if (!out) fail(fmt::format("field '{}' is not a decimal with <= 6 places: '{}'", key, v));
  return *out;
}

std::vector<std::uint64_t> TaggedLine::unsigned_list(std::string_view key) const {
  std::vector<std::uint64_t> out;
  for (std::string_view part : split(str(key), ',')) {
    std::uint64_t value = 0;
    auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), value);
    if (part.empty() || ec != std::errc{} || ptr != part.data() + part.size()) {
      fail(fmt::format("field '{}' holds a bad list element '{}'", key, part));
    }
    out.push_back(value);
  }
  return out;
}

std::vector<std::string> TaggedLine::str_list(std::string_view key) const {
  std::vector<std::string> out;
  for (std::string_view part : split(str(key), ',')) {
    if (!part.empty()) out.emplace_back(part);
  }
  return out;
}

LineWriter::LineWriter(std::string_view tag) : line_(tag) {}

LineWriter& LineWriter::add(std::string_view key, std::string_view value) {
  line_ += ' ';
  line_ += key;
  line_ += '=';
  for (char c : value) {
    if (needs_escape(c)) {
      line_ += fmt::format("%{:02X}", static_cast<unsigned char>(c));
    } else {
      line_ += c;
    }
  }
  return *this;
}

LineWriter& LineWriter::add(std::string_view key, std::int64_t value) {
  return add(key, fmt::format("{}", value));
}

LineWriter& LineWriter::add(std::string_view key, std::uint64_t value) {
  return add(key, fmt::format("{}", value));
}

LineWriter& LineWriter::add(std::string_view key, double value) {
  return add(key, format_double(value));
}

LineWriter& LineWriter::add_micros(std::string_view key, std::int64_t millionths) {
  return add(key, format_micros(millionths));
}

std::string format_double(double value) {
  // fmt's default is the shortest round-trip form.
  return fmt::format("{}", value);
}

std::string format_micros(std::int64_t millionths) {
  const bool negative = millionths < 0;
  const std::uint64_t magnitude =
      negative ? 0 - static_cast<std::uint64_t>(millionths)
               : static_cast<std::uint64_t>(millionths);
  return fmt::format("{}{}.{:06}", negative ? "-" : "", magnitude / 1000000,
                     magnitude % 1000000);
}

std::optional<std::int64_t> parse_micros(std::string_view text) {
  bool negative = false;
  if (!text.empty() && text.front() == '-') {
    negative = true;
    text.remove_prefix(1);
  }
  if (text.empty()) return std::nullopt;
  const auto dot = text.find('.');
  const std::string_view whole = text.substr(0, dot);
  std::string_view frac = dot == std::string_view::npos ? std::string_view{} : text.substr(dot + 1);
  if (whole.empty() || frac.size() > 6) return std::nullopt;
  if (dot != std::string_view::npos && frac.empty()) return std::nullopt;

  std::uint64_t w = 0;
  auto [p1, e1] = std::from_chars(whole.data(), whole.data() + whole.size(), w);
  if (e1 != std::errc{} || p1 != whole.data() + whole.size()) return std::nullopt;
  std::uint64_t f = 0;
  if (!frac.empty()) {
    auto [p2, e2] = std::from_chars(frac.data(), frac.data() + frac.size(), f);
    if (e2 != std::errc{} || p2 != frac.data() + frac.size()) return std::nullopt;
    for (std::size_t i = frac.size(); i < 6; ++i) f *= 10;
  }
  constexpr auto kMax = static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max());
  if (w > (kMax - f) / 1000000) return std::nullopt;
  const auto value = static_cast<std::int64_t>(w * 1000000 + f);
  return negative ? -value : value;
}

}  // namespace peak
