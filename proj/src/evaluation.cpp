#include "peak/evaluation.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace peak {

double mape(const EvalInputs& in) {
  for (double e : {in.attributed, in.attributed_static, in.measured, in.static_total}) {
    if (!(e >= 0.0) || !std::isfinite(e)) {
      throw DomainError(fmt::format("energies must be finite and non-negative, got {}", e));
    }
  }
  if (!(in.beta > 0.0 && in.beta <= 1.0)) {
    throw DomainError(fmt::format("overhead factor {} is outside (0, 1]", in.beta));
  }
  const double reference = in.reference();
  if (reference == 0.0) {
    throw UndefinedMetricError("MAPE is undefined when the reference energy is zero");
  }
  return 100.0 * std::fabs(1.0 - in.comparable() / reference);
}

EvalInputs eval_inputs(const TaskRollup& rollup, double beta) {
  EvalInputs in;
  in.attributed = nanojoules_to_joules(rollup.workflow.energy.total());
  in.attributed_static = nanojoules_to_joules(rollup.workflow.energy.static_energy());
  in.measured = rollup.rapl_total();
  in.static_total = rollup.static_total();
  in.beta = beta;
  return in;
}

EvalInputs eval_inputs(const RawDataset& data, Timestamp from, Timestamp to, double beta) {
  EvalInputs in;
  in.beta = beta;
  EnergyBreakdown attributed;
  for (const AttributionRecord& r : data.records) {
    if (r.start >= from && r.start < to) attributed += breakdown_of(r);
  }
  in.attributed = nanojoules_to_joules(attributed.total());
  in.attributed_static = nanojoules_to_joules(attributed.static_energy());
  for (const NodeLedger& nl : data.ledgers) {
    if (nl.ledger.start < from || nl.ledger.start >= to) continue;
    for (const auto& [key, e] : nl.ledger.energy) {
      in.measured += e.total;
      in.static_total += e.static_energy;
    }
  }
  return in;
}

SweepResult calibrate_gamma(const Trace& trace, const MonitorConfig& base,
                            std::span<const double> sweep, double beta) {
  if (sweep.empty()) throw ConfigError("the gamma sweep set is empty");
  std::vector<double> gammas(sweep.begin(), sweep.end());
  std::sort(gammas.begin(), gammas.end());
  gammas.erase(std::unique(gammas.begin(), gammas.end()), gammas.end());

  SweepResult result;
  for (double g : gammas) {
    MonitorConfig config = base;
    config.gamma = Gamma(g);
    const RawDataset data = run_replay(config, trace);
    const EvalInputs in = eval_inputs(rollup(data), beta);
    result.points.push_back(SweepPoint{g, mape(in), in});
  }
  const SweepPoint* best = &result.points.front();
  for (const SweepPoint& p : result.points) {
    if (p.mape < best->mape) best = &p;
  }
  result.selected = best->gamma;
  result.selected_mape = best->mape;
  return result;
}

double BetaSource::for_segment(const std::string& label) const {
  auto it = per_segment.find(label);
  return it == per_segment.end() ? fallback : it->second;
}

namespace {

struct Window {
  std::string label;
  Timestamp start;
  Timestamp end;
};

std::vector<Window> segment_windows(const RawDataset& data) {
  std::vector<SegmentMark> marks = data.segments;
  std::stable_sort(marks.begin(), marks.end(),
                   [](const SegmentMark& a, const SegmentMark& b) { return a.t < b.t; });
  const Timestamp open_end = Timestamp::max();
  if (marks.empty()) return {Window{"all", data.run.start, open_end}};
  std::vector<Window> out;
  for (std::size_t i = 0; i < marks.size(); ++i) {
    out.push_back(Window{marks[i].label, marks[i].t,
                         i + 1 < marks.size() ? marks[i + 1].t : open_end});
  }
  return out;
}

ModelComparison score_model(const std::string& name, const Trace& trace, MonitorConfig config,
                            const BetaSource& beta) {
  ModelComparison model{name, config.mode, {}, {}};
  const RawDataset data = run_replay(config, trace);
  model.tasks = rollup(data).logical;
  for (const Window& w : segment_windows(data)) {
    SegmentScore s{w.label, w.start, std::min(w.end, data.run.stop), 0.0, std::nullopt, {}};
    s.inputs = eval_inputs(data, w.start, w.end, beta.for_segment(w.label));
    s.mape = mape(s.inputs);
    if (!model.segments.empty()) s.deviation = s.mape - model.segments.front().mape;
    model.segments.push_back(std::move(s));
  }
  return model;
}

}  // namespace

BaselineComparison compare_baseline(const Trace& trace, const MonitorConfig& base,
                                    const BetaSource& beta) {
  BaselineComparison out;
  out.gamma = base.gamma.value();
  MonitorConfig nonlinear = base;
  if (nonlinear.mode == AttributionMode::Linear) nonlinear.mode = AttributionMode::Faithful;
  MonitorConfig linear = base;
  linear.mode = AttributionMode::Linear;
  out.models.push_back(score_model("peak", trace, nonlinear, beta));
  out.models.push_back(score_model("linear", trace, linear, beta));
  return out;
}

std::vector<ReportSection> sweep_sections(const SweepResult& result) {
  ReportSection points{"sweep", {"gamma", "mape_pct", "attributed_j", "measured_j", "selected"},
                       {}};
  for (const SweepPoint& p : result.points) {
    points.rows.push_back({format_double(p.gamma), format_double(p.mape),
                           format_double(p.inputs.attributed), format_double(p.inputs.measured),
                           p.gamma == result.selected ? "yes" : "no"});
  }
  return {points};
}

std::vector<ReportSection> comparison_sections(const BaselineComparison& c) {
  ReportSection scores{"comparison",
                       {"model", "mode", "gamma", "segment", "start", "end", "mape_pct",
                        "deviation_pp"},
                       {}};
  ReportSection tasks{"model_task", {"model", "task", "physical_tasks", "total_j"}, {}};
  for (const ModelComparison& m : c.models) {
    for (const SegmentScore& s : m.segments) {
      scores.rows.push_back({m.model, std::string(to_string(m.mode)), format_double(c.gamma),
                             s.label, format_micros(s.start.count()),
                             format_micros(s.end.count()), format_double(s.mape),
                             s.deviation ? format_double(*s.deviation) : "-"});
    }
    for (const LogicalTask& t : m.tasks) {
      tasks.rows.push_back({m.model, t.task, std::to_string(t.physical_tasks),
                            format_nanojoules(t.energy.total())});
    }
  }
  return {scores, tasks};
}

}  // namespace peak
