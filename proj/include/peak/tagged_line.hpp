#pragma once

// The line-oriented "tag key=value ..." format shared by traces, datasets and
// reports. Whitespace and '%' inside values are percent-escaped; '#' starts a
// comment line.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "peak/common.hpp"

namespace peak {

class TaggedLineError : public Error {
 public:
  TaggedLineError(std::size_t line, const std::string& message);

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class TaggedLine {
 public:
  // nullopt for blank and comment lines.
  static std::optional<TaggedLine> parse(std::string_view text, std::size_t line_no);

  const std::string& tag() const { return tag_; }
  std::size_t line_no() const { return line_no_; }
  bool has(std::string_view key) const;

  // Each getter throws TaggedLineError naming the line and key.
  const std::string& str(std::string_view key) const;
  std::string str_or(std::string_view key, std::string_view fallback) const;
  std::int64_t integer(std::string_view key) const;
  std::uint64_t unsigned_integer(std::string_view key) const;
  double real(std::string_view key) const;
  // Decimal with up to six fractional digits, scaled to millionths exactly.
  std::int64_t micros(std::string_view key) const;
  Timestamp time(std::string_view key) const { return Timestamp{micros(key)}; }
  std::vector<std::uint64_t> unsigned_list(std::string_view key) const;
  std::vector<std::string> str_list(std::string_view key) const;

  [[noreturn]] void fail(const std::string& message) const;

 private:
  std::string tag_;
  std::vector<std::pair<std::string, std::string>> fields_;
  std::size_t line_no_ = 0;
};

// Builds one output line with fields in insertion order.
class LineWriter {
 public:
  explicit LineWriter(std::string_view tag);

  LineWriter& add(std::string_view key, std::string_view value);
  LineWriter& add(std::string_view key, const char* value) {
    return add(key, std::string_view(value));
  }
  LineWriter& add(std::string_view key, const std::string& value) {
    return add(key, std::string_view(value));
  }
  LineWriter& add(std::string_view key, std::int64_t value);
  LineWriter& add(std::string_view key, std::uint64_t value);
  LineWriter& add(std::string_view key, int value) {
    return add(key, static_cast<std::int64_t>(value));
  }
  LineWriter& add(std::string_view key, unsigned value) {
    return add(key, static_cast<std::uint64_t>(value));
  }
  // Shortest representation that reads back to the same double.
  LineWriter& add(std::string_view key, double value);
  LineWriter& add_micros(std::string_view key, std::int64_t millionths);
  LineWriter& add_time(std::string_view key, Timestamp t) {
    return add_micros(key, t.count());
  }

  const std::string& str() const { return line_; }

 private:
  std::string line_;
};

std::string format_micros(std::int64_t millionths);
std::optional<std::int64_t> parse_micros(std::string_view text);
std::string format_double(double value);

// Splits on the separator, keeping empty fields.
std::vector<std::string_view> split(std::string_view text, char separator);

}  // namespace peak
