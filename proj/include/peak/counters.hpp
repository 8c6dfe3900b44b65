#pragma once

// Overflow-corrected RAPL counter deltas, idle-window static power and
// per-interval energy ledgers.
//
// Counters are carried as integer microjoules, the unit powercap exposes, so
// unwrapping and summing deltas is exact.

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "peak/attribution.hpp"
#include "peak/common.hpp"

namespace peak {

// Energy counted before a cumulative register folds back to zero on the
// reference hardware; used as trace defaults.
inline constexpr std::uint64_t kPackageWrapMicrojoules = 262'143'300'000;
inline constexpr std::uint64_t kDramWrapMicrojoules = 65'713'000'000;

std::uint64_t default_wrap_microjoules(Domain domain);

inline double microjoules_to_joules(std::uint64_t uj) {
  return static_cast<double>(uj) / 1e6;
}

class PairingError : public Error {
 public:
  using Error::Error;
};

class OrderingError : public Error {
 public:
  using Error::Error;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

class GapError : public Error {
 public:
  explicit GapError(std::vector<LedgerKey> keys);

  const std::vector<LedgerKey>& keys() const { return keys_; }

 private:
  std::vector<LedgerKey> keys_;
};

struct CounterSample {
  Timestamp timestamp{};
  SocketId socket;
  Domain domain = Domain::CpuPackage;
  std::uint64_t cumulative_uj = 0;
  std::uint64_t wrap_uj = kPackageWrapMicrojoules;

  LedgerKey key() const { return LedgerKey{socket, domain}; }
  double cumulative_joules() const { return microjoules_to_joules(cumulative_uj); }
};

// Exact delta in microjoules, assuming at most one wrap between samples.
std::uint64_t counter_delta_uj(const CounterSample& prev,
                               const CounterSample& next);
double counter_delta(const CounterSample& prev, const CounterSample& next);

struct StaticPower {
  double watts = 0.0;
  double measured_over = 0.0;  // seconds
  Timestamp measured_at{};     // end of the idle window
};

struct StaticPowerProfile {
  std::map<LedgerKey, StaticPower> entries;

  bool has_domain(Domain domain) const;
  // Throws GapError when the key has no estimate.
  double watts(const LedgerKey& key) const;
};

// Samples may interleave keys but must be time-ordered per key.
StaticPowerProfile estimate_static_power(std::span<const CounterSample> samples);

// Energy ledger between two boundary scans. Fills total, static and dynamic
// energy per key; process totals are left for the caller.
IntervalLedger ledger_for_interval(std::span<const CounterSample> start,
                                   std::span<const CounterSample> end,
                                   const StaticPowerProfile& profile);

}  // namespace peak
