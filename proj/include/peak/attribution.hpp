#pragma once

// Energy attribution math: static/dynamic split, energy credits, per-process
// CPU and DRAM attribution, the linear CPU-time baseline and the optional
// conserving variant. Everything here is pure.

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "peak/common.hpp"

namespace peak {

class MissingLedgerError : public Error {
 public:
  using Error::Error;
};

// Non-linearity exponent applied to resource shares. Valid range [0, 1].
class Gamma {
 public:
  static constexpr double kDefault = 0.3;

  Gamma() = default;
  explicit Gamma(double value);

  double value() const { return value_; }

 private:
  double value_ = kDefault;
};

// Tolerance for share sums that should not exceed one.
inline constexpr double kShareEpsilon = 1e-6;

enum class AttributionMode { Faithful, Conserving, Linear };

std::string_view to_string(AttributionMode mode);
AttributionMode parse_attribution_mode(std::string_view text);

struct DomainEnergy {
  double total = 0.0;
  double static_energy = 0.0;
  double dynamic = 0.0;
  // How far total fell below the static estimate; zero unless clamped.
  double clamped_by = 0.0;

  bool clamped() const { return clamped_by > 0.0; }
};

struct IntervalLedger {
  Timestamp start{};
  Timestamp end{};
  std::map<LedgerKey, DomainEnergy> energy;
  // CPU seconds accrued by every observed process, per socket.
  std::map<SocketId, double> cpu_time_total;
  // Resident bytes of every observed process at interval end, per socket.
  std::map<SocketId, double> memory_total;

  double length_seconds() const { return to_seconds(end - start); }
  bool has_domain(Domain domain) const;
  // nullptr when the key is absent.
  const DomainEnergy* find(const SocketId& socket, Domain domain) const;
};

struct SocketShare {
  double cpu = 0.0;     // CPU-time share
  double memory = 0.0;  // resident-memory share
};

struct ProcessShare {
  Pid pid = 0;
  std::map<SocketId, SocketShare> sockets;
};

struct EnergySplit {
  double dynamic = 0.0;
  double static_energy = 0.0;

  double total() const { return dynamic + static_energy; }
};

struct AttributionRecord {
  std::string node;
  Pid pid = 0;
  unsigned instance = 0;
  std::size_t interval = 0;
  Timestamp start{};
  Timestamp end{};
  double cpu_dynamic = 0.0;
  double cpu_static = 0.0;
  double dram_dynamic = 0.0;
  double dram_static = 0.0;
};

// p_static * interval_length. Throws InvalidIntervalError for length <= 0.
double compute_static_energy(double p_static_watts, double interval_seconds);
std::map<LedgerKey, double> compute_static_energy(
    const std::map<LedgerKey, double>& p_static_watts, double interval_seconds);

struct DynamicSplit {
  double dynamic = 0.0;
  bool clamped = false;
  double clamped_by = 0.0;
};

// max(total - static, 0); a negative difference is reported as a clamp.
DynamicSplit split_dynamic(double total, double static_energy);

// share^gamma, with 0^0 defined as 0 so an idle process earns nothing.
double energy_credit(double share, Gamma gamma);

EnergySplit attribute_cpu(const ProcessShare& share,
                          const IntervalLedger& ledger, Gamma gamma);
EnergySplit attribute_memory(const ProcessShare& share,
                             const IntervalLedger& ledger, Gamma gamma);

double total_process_energy(const AttributionRecord& record);

// Linear CPU-time heuristic: every domain's energy weighted by the plain
// share. `total` is measured energy times share; `split` decomposes the same
// weighting over the ledger's static and (clamped) dynamic parts.
struct LinearDomainAttribution {
  double total = 0.0;
  EnergySplit split;
};

struct LinearAttribution {
  LinearDomainAttribution cpu;
  LinearDomainAttribution dram;
};

LinearAttribution attribute_linear_baseline(const ProcessShare& share,
                                            const IntervalLedger& ledger);

struct ProcessAttribution {
  EnergySplit cpu;
  EnergySplit dram;
};

struct ConservingAttribution {
  // Same order as the input shares.
  std::vector<ProcessAttribution> processes;
  // Dynamic energy left over on sockets where every credit was zero.
  std::map<LedgerKey, double> unattributed_dynamic;
};

// Credits normalized per socket and domain so attributed dynamic energy sums
// to the ledger's dynamic energy. `shares` must cover every observed process.
ConservingAttribution attribute_conserving(std::span<const ProcessShare> shares,
                                           const IntervalLedger& ledger,
                                           Gamma gamma);

// Dispatch over all three modes. For Faithful and Linear each process is
// independent; Conserving normalizes across the whole span.
std::vector<ProcessAttribution> attribute_interval(
    std::span<const ProcessShare> shares, const IntervalLedger& ledger,
    Gamma gamma, AttributionMode mode);

}  // namespace peak
