#pragma once

// Parsers for the /proc files the live backend reads.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "peak/common.hpp"
#include "peak/telemetry.hpp"

namespace peak {

class ParseError : public Error {
 public:
  using Error::Error;
};

// Fields of /proc/<pid>/stat the attribution needs. Times are clock ticks.
struct ProcStat {
  Pid pid = 0;
  std::string comm;
  char state = '?';
  std::uint64_t utime = 0;
  std::uint64_t stime = 0;
  std::uint64_t starttime = 0;
  unsigned processor = 0;  // last CPU the task ran on (field 39)
};

ProcStat parse_proc_stat(std::string_view text);

// VmRSS from /proc/<pid>/status, in bytes. Kernel threads have none.
std::optional<std::uint64_t> parse_status_vmrss(std::string_view text);

struct CgroupEntry {
  std::string hierarchy;
  std::string controllers;
  std::string path;
};

std::vector<CgroupEntry> parse_proc_cgroup(std::string_view text);

// "processor" / "physical id" pairs from /proc/cpuinfo.
TopologyMap parse_cpuinfo(std::string_view text);

}  // namespace peak
