#pragma once

// On-disk form of a monitoring run: a directory holding four tagged-line
// files.
//
//   static.tl   run parameters, static power, unavailable domains, counters,
//               segment marks
//   pods.tl     pods and their pid bindings
//   ledgers.tl  per-interval energy ledgers and skipped intervals
//   records.tl  per-process attribution records
//
// Doubles are written in shortest round-trip form, so a write/read cycle is
// lossless.

#include <filesystem>
#include <iosfwd>

#include "peak/monitor.hpp"

namespace peak {

inline constexpr const char* kStaticFile = "static.tl";
inline constexpr const char* kPodsFile = "pods.tl";
inline constexpr const char* kLedgersFile = "ledgers.tl";
inline constexpr const char* kRecordsFile = "records.tl";

class DatasetError : public Error {
 public:
  using Error::Error;
};

void write_static(std::ostream& out, const RawDataset& data);
void write_pods(std::ostream& out, const RawDataset& data);
void write_ledgers(std::ostream& out, const RawDataset& data);
void write_records(std::ostream& out, const std::vector<AttributionRecord>& records);

void read_static(std::istream& in, RawDataset& data);
void read_pods(std::istream& in, RawDataset& data);
void read_ledgers(std::istream& in, RawDataset& data);
std::vector<AttributionRecord> read_records(std::istream& in);

// Creates the directory if needed. Throws DatasetError.
void write_dataset(const std::filesystem::path& dir, const RawDataset& data);
// Throws DatasetError naming the file and line of the first problem.
RawDataset read_dataset(const std::filesystem::path& dir);

}  // namespace peak
