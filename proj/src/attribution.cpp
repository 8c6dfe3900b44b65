#include "peak/attribution.hpp"

#include <cmath>

#include <fmt/format.h>

namespace peak {

Gamma::Gamma(double value) : value_(value) {
  if (!(value >= 0.0 && value <= 1.0)) {
    throw DomainError(fmt::format("gamma must lie in [0, 1], got {}", value));
  }
}

std::string_view to_string(AttributionMode mode) {
  switch (mode) {
    case AttributionMode::Faithful:
      return "faithful";
    case AttributionMode::Conserving:
      return "conserving";
    case AttributionMode::Linear:
      return "linear";
  }
  return "?";
}

AttributionMode parse_attribution_mode(std::string_view text) {
  if (text == "faithful") return AttributionMode::Faithful;
  if (text == "conserving") return AttributionMode::Conserving;
  if (text == "linear") return AttributionMode::Linear;
  throw ConfigError(fmt::format("unknown attribution mode '{}'", text));
}

bool IntervalLedger::has_domain(Domain domain) const {
  for (const auto& [key, value] : energy) {
    if (key.domain == domain) return true;
  }
  return false;
}

const DomainEnergy* IntervalLedger::find(const SocketId& socket,
                                         Domain domain) const {
  auto it = energy.find(LedgerKey{socket, domain});
  return it == energy.end() ? nullptr : &it->second;
}

double compute_static_energy(double p_static_watts, double interval_seconds) {
  if (!(interval_seconds > 0.0)) {
    throw InvalidIntervalError(
        fmt::format("interval length must be positive, got {} s",
                    interval_seconds));
  }
  return p_static_watts * interval_seconds;
}

std::map<LedgerKey, double> compute_static_energy(
    const std::map<LedgerKey, double>& p_static_watts,
    double interval_seconds) {
  std::map<LedgerKey, double> out;
  for (const auto& [key, watts] : p_static_watts) {
    out.emplace(key, compute_static_energy(watts, interval_seconds));
  }
  return out;
}

DynamicSplit split_dynamic(double total, double static_energy) {
  const double diff = total - static_energy;
  if (diff < 0.0) return DynamicSplit{0.0, true, -diff};
  return DynamicSplit{diff, false, 0.0};
}

double energy_credit(double share, Gamma gamma) {
  if (!(share >= 0.0 && share <= 1.0)) {
    throw DomainError(fmt::format("share must lie in [0, 1], got {}", share));
  }
  if (share == 0.0) return 0.0;
  return std::pow(share, gamma.value());
}

namespace {

enum class ShareKind { Cpu, Memory };

double pick(const SocketShare& s, ShareKind kind) {
  return kind == ShareKind::Cpu ? s.cpu : s.memory;
}

Domain domain_of(ShareKind kind) {
  return kind == ShareKind::Cpu ? Domain::CpuPackage : Domain::Dram;
}

const DomainEnergy* lookup(const IntervalLedger& ledger,
                           const SocketId& socket, Domain domain,
                           bool domain_present) {
  const DomainEnergy* e = ledger.find(socket, domain);
  if (e == nullptr && domain_present) {
    throw MissingLedgerError(fmt::format(
        "no ledger entry for {}", describe(LedgerKey{socket, domain})));
  }
  return e;
}

EnergySplit attribute_domain(const ProcessShare& share,
                             const IntervalLedger& ledger, Gamma gamma,
                             ShareKind kind) {
  const Domain domain = domain_of(kind);
  // A node without this RAPL domain contributes nothing.
  const bool present = ledger.has_domain(domain);
  EnergySplit out;
  for (const auto& [socket, s] : share.sockets) {
    const DomainEnergy* e = lookup(ledger, socket, domain, present);
    if (e == nullptr) continue;
    const double x = pick(s, kind);
    out.dynamic += e->dynamic * energy_credit(x, gamma);
    out.static_energy += e->static_energy * x;
  }
  return out;
}

LinearDomainAttribution attribute_linear_domain(const ProcessShare& share,
                                                const IntervalLedger& ledger,
                                                ShareKind kind) {
  const Domain domain = domain_of(kind);
  const bool present = ledger.has_domain(domain);
  LinearDomainAttribution out;
  for (const auto& [socket, s] : share.sockets) {
    const DomainEnergy* e = lookup(ledger, socket, domain, present);
    if (e == nullptr) continue;
    const double x = pick(s, kind);
    out.total += e->total * x;
    out.split.dynamic += e->dynamic * x;
    out.split.static_energy += e->static_energy * x;
  }
  return out;
}

}  // namespace

EnergySplit attribute_cpu(const ProcessShare& share,
                          const IntervalLedger& ledger, Gamma gamma) {
  return attribute_domain(share, ledger, gamma, ShareKind::Cpu);
}

EnergySplit attribute_memory(const ProcessShare& share,
                             const IntervalLedger& ledger, Gamma gamma) {
  return attribute_domain(share, ledger, gamma, ShareKind::Memory);
}

double total_process_energy(const AttributionRecord& record) {
  return record.cpu_dynamic + record.cpu_static + record.dram_dynamic +
         record.dram_static;
}

LinearAttribution attribute_linear_baseline(const ProcessShare& share,
                                            const IntervalLedger& ledger) {
  return LinearAttribution{
      attribute_linear_domain(share, ledger, ShareKind::Cpu),
      attribute_linear_domain(share, ledger, ShareKind::Memory)};
}

ConservingAttribution attribute_conserving(std::span<const ProcessShare> shares,
                                           const IntervalLedger& ledger,
                                           Gamma gamma) {
  ConservingAttribution out;
  out.processes.resize(shares.size());

  for (ShareKind kind : {ShareKind::Cpu, ShareKind::Memory}) {
    const Domain domain = domain_of(kind);
    const bool present = ledger.has_domain(domain);

    // Credit sums per socket, accumulated in process order.
    std::map<SocketId, double> credit_sum;
    for (const ProcessShare& share : shares) {
      for (const auto& [socket, s] : share.sockets) {
        if (lookup(ledger, socket, domain, present) == nullptr) continue;
        credit_sum[socket] += energy_credit(pick(s, kind), gamma);
      }
    }

    for (std::size_t i = 0; i < shares.size(); ++i) {
      EnergySplit& split = kind == ShareKind::Cpu ? out.processes[i].cpu
                                                  : out.processes[i].dram;
      for (const auto& [socket, s] : shares[i].sockets) {
        const DomainEnergy* e = lookup(ledger, socket, domain, present);
        if (e == nullptr) continue;
        const double x = pick(s, kind);
        const double sum = credit_sum[socket];
        if (sum > 0.0) {
          split.dynamic += e->dynamic * (energy_credit(x, gamma) / sum);
        }
        split.static_energy += e->static_energy * x;
      }
    }

    for (const auto& [key, e] : ledger.energy) {
      if (key.domain != domain || e.dynamic <= 0.0) continue;
      auto it = credit_sum.find(key.socket);
      if (it == credit_sum.end() || it->second <= 0.0) {
        out.unattributed_dynamic[key] += e.dynamic;
      }
    }
  }
  return out;
}

std::vector<ProcessAttribution> attribute_interval(
    std::span<const ProcessShare> shares, const IntervalLedger& ledger,
    Gamma gamma, AttributionMode mode) {
  if (mode == AttributionMode::Conserving) {
    return attribute_conserving(shares, ledger, gamma).processes;
  }
  std::vector<ProcessAttribution> out;
  out.reserve(shares.size());
  for (const ProcessShare& share : shares) {
    if (mode == AttributionMode::Linear) {
      LinearAttribution linear = attribute_linear_baseline(share, ledger);
      out.push_back({linear.cpu.split, linear.dram.split});
    } else {
      out.push_back({attribute_cpu(share, ledger, gamma),
                     attribute_memory(share, ledger, gamma)});
    }
  }
  return out;
}

}  // namespace peak
