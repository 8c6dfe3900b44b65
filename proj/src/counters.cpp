#include "peak/counters.hpp"

#include <set>

#include <fmt/format.h>

namespace peak {

namespace {

void validate(const CounterSample& s) {
  if (s.wrap_uj == 0 || s.cumulative_uj >= s.wrap_uj) {
    throw DomainError(fmt::format(
        "counter {} reads {} uJ outside [0, {})", describe(s.key()),
        s.cumulative_uj, s.wrap_uj));
  }
}

std::string join_keys(const std::vector<LedgerKey>& keys) {
  std::string out;
  for (const LedgerKey& key : keys) {
    if (!out.empty()) out += ", ";
    out += describe(key);
  }
  return out;
}

}  // namespace

std::uint64_t default_wrap_microjoules(Domain domain) {
  return domain == Domain::Dram ? kDramWrapMicrojoules
                                : kPackageWrapMicrojoules;
}

GapError::GapError(std::vector<LedgerKey> keys)
    : Error("missing boundary sample for " + join_keys(keys)),
      keys_(std::move(keys)) {}

std::uint64_t counter_delta_uj(const CounterSample& prev,
                               const CounterSample& next) {
  if (prev.key() != next.key()) {
    throw PairingError(fmt::format("cannot pair {} with {}",
                                   describe(prev.key()), describe(next.key())));
  }
  if (next.timestamp <= prev.timestamp) {
    throw OrderingError(fmt::format(
        "counter {} timestamps not increasing ({} us -> {} us)",
        describe(next.key()), prev.timestamp.count(), next.timestamp.count()));
  }
  validate(prev);
  validate(next);
  if (next.cumulative_uj >= prev.cumulative_uj) {
    return next.cumulative_uj - prev.cumulative_uj;
  }
  return prev.wrap_uj - prev.cumulative_uj + next.cumulative_uj;
}

double counter_delta(const CounterSample& prev, const CounterSample& next) {
  return microjoules_to_joules(counter_delta_uj(prev, next));
}

bool StaticPowerProfile::has_domain(Domain domain) const {
  for (const auto& [key, value] : entries) {
    if (key.domain == domain) return true;
  }
  return false;
}

double StaticPowerProfile::watts(const LedgerKey& key) const {
  auto it = entries.find(key);
  if (it == entries.end()) throw GapError({key});
  return it->second.watts;
}

StaticPowerProfile estimate_static_power(
    std::span<const CounterSample> samples) {
  std::map<LedgerKey, std::vector<const CounterSample*>> by_key;
  for (const CounterSample& s : samples) by_key[s.key()].push_back(&s);

  if (by_key.empty()) {
    throw InsufficientDataError("idle window holds no counter samples");
  }

  StaticPowerProfile profile;
  for (const auto& [key, series] : by_key) {
    if (series.size() < 2) {
      throw InsufficientDataError(fmt::format(
          "idle window needs at least 2 samples for {}, got {}", describe(key),
          series.size()));
    }
    std::uint64_t total_uj = 0;
    for (std::size_t i = 1; i < series.size(); ++i) {
      total_uj += counter_delta_uj(*series[i - 1], *series[i]);
    }
    const Timestamp window = series.back()->timestamp - series.front()->timestamp;
    const double seconds = to_seconds(window);
    if (!(seconds > 0.0)) {
      throw InvalidIntervalError(
          fmt::format("idle window for {} has zero length", describe(key)));
    }
    profile.entries.emplace(
        key, StaticPower{microjoules_to_joules(total_uj) / seconds, seconds,
                         series.back()->timestamp});
  }
  return profile;
}

IntervalLedger ledger_for_interval(std::span<const CounterSample> start,
                                   std::span<const CounterSample> end,
                                   const StaticPowerProfile& profile) {
  std::map<LedgerKey, const CounterSample*> first;
  std::map<LedgerKey, const CounterSample*> last;
  for (const CounterSample& s : start) first[s.key()] = &s;
  for (const CounterSample& s : end) last[s.key()] = &s;

  std::set<LedgerKey> keys;
  for (const auto& [key, value] : profile.entries) keys.insert(key);
  for (const auto& [key, value] : first) keys.insert(key);
  for (const auto& [key, value] : last) keys.insert(key);

  std::vector<LedgerKey> missing;
  for (const LedgerKey& key : keys) {
    if (!first.contains(key) || !last.contains(key) ||
        !profile.entries.contains(key)) {
      missing.push_back(key);
    }
  }
  if (!missing.empty()) throw GapError(std::move(missing));
  if (keys.empty()) throw GapError({});

  IntervalLedger ledger;
  ledger.start = first.begin()->second->timestamp;
  ledger.end = last.begin()->second->timestamp;
  const double seconds = ledger.length_seconds();

  for (const LedgerKey& key : keys) {
    DomainEnergy e;
    e.total = counter_delta(*first[key], *last[key]);
    e.static_energy = compute_static_energy(profile.watts(key), seconds);
    const DynamicSplit split = split_dynamic(e.total, e.static_energy);
    e.dynamic = split.dynamic;
    e.clamped_by = split.clamped_by;
    ledger.energy.emplace(key, e);
  }
  return ledger;
}

}  // namespace peak
