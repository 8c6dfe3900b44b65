#include "peak/procfs.hpp"

#include <algorithm>
#include <charconv>
#include <map>

#include <fmt/format.h>

namespace peak {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

template <typename T>
T to_number(std::string_view text, std::string_view what) {
  T value{};
  const auto* begin = text.data();
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end) {
    throw ParseError(fmt::format("bad {} '{}'", what, text));
  }
  return value;
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\n' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\n' && s[j] != '\t') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace

ProcStat parse_proc_stat(std::string_view text) {
  // comm may hold spaces and parentheses; it ends at the last ')'.
  const auto open = text.find('(');
  const auto close = text.rfind(')');
  if (open == std::string_view::npos || close == std::string_view::npos ||
      close < open) {
    throw ParseError("stat record lacks a (comm) field");
  }
  ProcStat stat;
  stat.pid = to_number<Pid>(trim(text.substr(0, open)), "pid");
  stat.comm = std::string(text.substr(open + 1, close - open - 1));

  // rest[0] is field 3 (state).
  const auto rest = split_ws(text.substr(close + 1));
  constexpr std::size_t kProcessorIndex = 39 - 3;
  if (rest.size() <= kProcessorIndex) {
    throw ParseError(fmt::format("stat record for pid {} has {} fields, need 39",
                                 stat.pid, rest.size() + 2));
  }
  stat.state = rest[0].empty() ? '?' : rest[0][0];
  stat.utime = to_number<std::uint64_t>(rest[14 - 3], "utime");
  stat.stime = to_number<std::uint64_t>(rest[15 - 3], "stime");
  stat.starttime = to_number<std::uint64_t>(rest[22 - 3], "starttime");
  stat.processor = to_number<unsigned>(rest[kProcessorIndex], "processor");
  return stat;
}

std::optional<std::uint64_t> parse_status_vmrss(std::string_view text) {
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    const std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    if (!line.starts_with("VmRSS:")) continue;
    const auto fields = split_ws(line.substr(6));
    if (fields.empty()) throw ParseError("VmRSS line without a value");
    const auto kb = to_number<std::uint64_t>(fields[0], "VmRSS");
    if (fields.size() > 1 && fields[1] != "kB") {
      throw ParseError(fmt::format("unexpected VmRSS unit '{}'", fields[1]));
    }
    return kb * 1024;
  }
  return std::nullopt;
}

std::vector<CgroupEntry> parse_proc_cgroup(std::string_view text) {
  std::vector<CgroupEntry> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    const std::string_view line = trim(text.substr(pos, eol - pos));
    pos = eol + 1;
    if (line.empty()) continue;
    const auto c1 = line.find(':');
    const auto c2 = c1 == std::string_view::npos ? c1 : line.find(':', c1 + 1);
    if (c2 == std::string_view::npos) {
      throw ParseError(fmt::format("malformed cgroup line '{}'", line));
    }
    out.push_back({std::string(line.substr(0, c1)),
                   std::string(line.substr(c1 + 1, c2 - c1 - 1)),
                   std::string(line.substr(c2 + 1))});
  }
  return out;
}

TopologyMap parse_cpuinfo(std::string_view text) {
  std::map<unsigned, unsigned> socket_of;
  std::optional<unsigned> processor;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    const std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    const auto colon = line.find(':');
    if (colon == std::string_view::npos) continue;
    const std::string_view key = trim(line.substr(0, colon));
    const std::string_view value = trim(line.substr(colon + 1));
    if (key == "processor") {
      processor = to_number<unsigned>(value, "processor");
      socket_of[*processor] = 0;
    } else if (key == "physical id" && processor) {
      socket_of[*processor] = to_number<unsigned>(value, "physical id");
    }
  }
  if (socket_of.empty()) throw ParseError("cpuinfo lists no processors");

  TopologyMap map;
  map.socket_of_cpu.assign(socket_of.rbegin()->first + 1, 0);
  unsigned max_socket = 0;
  for (const auto& [cpu, socket] : socket_of) {
    map.socket_of_cpu[cpu] = socket;
    max_socket = std::max(max_socket, socket);
  }
  map.sockets = max_socket + 1;
  return map;
}

}  // namespace peak
