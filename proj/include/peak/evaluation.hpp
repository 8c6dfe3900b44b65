#pragma once

// Accuracy metric, gamma calibration sweep and comparison against the linear
// CPU-time baseline.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "peak/monitor.hpp"
#include "peak/report.hpp"
#include "peak/rollup.hpp"
#include "peak/trace.hpp"

namespace peak {

class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

struct EvalInputs {
  double attributed = 0.0;         // workflow energy, static included
  double attributed_static = 0.0;  // static part of `attributed`
  double measured = 0.0;           // node counter energy
  double static_total = 0.0;       // node static energy
  double beta = 1.0;               // platform overhead discount, (0, 1]

  // Node energy not explained by overhead.
  double reference() const { return beta * measured; }
  // Workflow energy plus the static energy no workflow process took.
  double comparable() const { return attributed + (static_total - attributed_static); }
};

// 100 * |1 - comparable / reference|. Throws UndefinedMetricError when the
// reference is zero and DomainError for negative energies or beta outside
// (0, 1].
double mape(const EvalInputs& inputs);

EvalInputs eval_inputs(const TaskRollup& rollup, double beta);
// Restricted to intervals whose start lies in [from, to).
EvalInputs eval_inputs(const RawDataset& data, Timestamp from, Timestamp to, double beta);

inline const std::vector<double> kDefaultSweep = {0.1, 0.2, 0.3, 0.4, 0.5,
                                                  0.6, 0.7, 0.8, 0.9};

struct SweepPoint {
  double gamma = 0.0;
  double mape = 0.0;
  EvalInputs inputs;
};

struct SweepResult {
  std::vector<SweepPoint> points;  // ascending gamma
  double selected = 0.0;
  double selected_mape = 0.0;
};

// Replays the trace once per gamma. Ties go to the smaller gamma.
SweepResult calibrate_gamma(const Trace& trace, const MonitorConfig& base,
                            std::span<const double> sweep, double beta);

// Overhead discount per segment label, with a fallback for unlisted labels.
struct BetaSource {
  double fallback = 1.0;
  std::map<std::string, double> per_segment;

  double for_segment(const std::string& label) const;
};

struct SegmentScore {
  std::string label;
  Timestamp start{};
  Timestamp end{};
  double mape = 0.0;
  // Signed percentage points relative to the first segment.
  std::optional<double> deviation;
  EvalInputs inputs;
};

struct ModelComparison {
  std::string model;
  AttributionMode mode = AttributionMode::Faithful;
  std::vector<SegmentScore> segments;
  std::vector<LogicalTask> tasks;
};

struct BaselineComparison {
  double gamma = Gamma::kDefault;
  std::vector<ModelComparison> models;  // non-linear model first, then linear
};

// Splits the run at the trace's segment marks; without marks the whole run is
// one segment and no deviation is reported.
BaselineComparison compare_baseline(const Trace& trace, const MonitorConfig& base,
                                    const BetaSource& beta);

std::vector<ReportSection> sweep_sections(const SweepResult& result);
std::vector<ReportSection> comparison_sections(const BaselineComparison& comparison);

}  // namespace peak
