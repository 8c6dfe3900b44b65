#include "peak/cli.hpp"

#include <atomic>
#include <charconv>
#include <csignal>
#include <fstream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "peak/dataset.hpp"
#include "peak/evaluation.hpp"
#include "peak/generator.hpp"
#include "peak/live.hpp"
#include "peak/report.hpp"
#include "peak/rollup.hpp"

namespace peak {

namespace {

std::atomic<bool> g_stop{false};

extern "C" void handle_stop_signal(int) { g_stop.store(true); }

class UsageError : public Error {
 public:
  using Error::Error;
};

struct ConfigFlags {
  double gamma = Gamma::kDefault;
  std::int64_t rapl_ms = 2000;
  std::int64_t poll_ms = 5000;
  double idle_window_s = 30.0;
  std::string mode = "faithful";
  std::string pod_filter = "^nf-";

  MonitorConfig build() const {
    MonitorConfig c;
    c.gamma = Gamma(gamma);
    c.rapl_interval = std::chrono::milliseconds(rapl_ms);
    c.poll_interval = std::chrono::milliseconds(poll_ms);
    c.idle_window = std::chrono::milliseconds(std::llround(idle_window_s * 1000.0));
    c.mode = parse_attribution_mode(mode);
    c.pod_filter = pod_filter;
    c.validate();
    return c;
  }
};

void add_config_flags(CLI::App* app, ConfigFlags& f) {
  app->add_option("--gamma", f.gamma, "Non-linearity exponent in [0, 1]")
      ->envname("PEAK_GAMMA")
      ->check(CLI::Range(0.0, 1.0));
  app->add_option("--rapl-interval-ms", f.rapl_ms, "Counter sampling interval")
      ->envname("PEAK_RAPL_MS")
      ->check(CLI::PositiveNumber);
  app->add_option("--poll-interval-ms", f.poll_ms, "Pod polling interval")
      ->envname("PEAK_POLL_MS")
      ->check(CLI::PositiveNumber);
  app->add_option("--idle-window-s", f.idle_window_s, "Idle window for static power (live)")
      ->check(CLI::PositiveNumber);
  app->add_option("--mode", f.mode, "Attribution mode")
      ->check(CLI::IsMember({"faithful", "conserving", "linear"}));
  app->add_option("--pod-filter", f.pod_filter, "Regex selecting workflow pods by name");
}

void add_format_flags(CLI::App* app, std::string& format, std::string& out_path) {
  app->add_option("--format", format, "Output format")
      ->check(CLI::IsMember({"table", "csv", "tagged"}));
  app->add_option("--out", out_path, "Write the report to this file instead of stdout");
}

void emit(std::ostream& out, const std::string& text, const std::string& path) {
  if (path.empty()) {
    out << text;
    return;
  }
  std::ofstream file(path);
  if (!file) throw Error(fmt::format("cannot write {}", path));
  file << text;
  if (!file) throw Error(fmt::format("failed writing {}", path));
}

std::vector<double> parse_sweep(const std::string& text) {
  std::vector<double> out;
  for (std::string_view part : split(text, ',')) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    if (part.empty() || ec != std::errc{} || ptr != part.data() + part.size()) {
      throw UsageError(fmt::format("bad sweep value '{}'", part));
    }
    if (!(v >= 0.0 && v <= 1.0)) throw UsageError(fmt::format("sweep value {} is outside [0, 1]", v));
    out.push_back(v);
  }
  return out;
}

std::string_view error_kind(const std::exception& e) {
  if (dynamic_cast<const StartupError*>(&e)) return "startup";
  if (dynamic_cast<const TaggedLineError*>(&e)) return "parse";
  if (dynamic_cast<const DatasetError*>(&e)) return "dataset";
  if (dynamic_cast<const ReportParseError*>(&e)) return "parse";
  if (dynamic_cast<const ScenarioError*>(&e)) return "scenario";
  if (dynamic_cast<const UndefinedMetricError*>(&e)) return "metric";
  if (dynamic_cast<const ConsistencyError*>(&e)) return "consistency";
  if (dynamic_cast<const DomainError*>(&e)) return "domain";
  return "io";
}

std::string summary_line(const RawDataset& data, const std::string& dir) {
  return fmt::format("{} intervals, {} records, {} pods, {} gaps, {} clamps -> {}\n",
                     data.ledgers.size(), data.records.size(), data.pods.size(),
                     data.counters.gaps, data.counters.clamps, dir);
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Per-task energy attribution for containerized workflows", "peak"};
  app.option_defaults()->always_capture_default();
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  // monitor
  ConfigFlags monitor_cfg;
  std::string monitor_out;
  std::string pods_file;
  std::string proc_root = "/proc";
  std::string powercap_root = std::string(kDefaultPowercapRoot);
  std::string node_name = "local";
  double duration_s = 0.0;
  auto* monitor = app.add_subcommand("monitor", "Monitor this host live");
  add_config_flags(monitor, monitor_cfg);
  monitor->add_option("--out", monitor_out, "Dataset output directory")->required();
  monitor->add_option("--pods", pods_file, "Pod listing file, re-read every poll")->required();
  monitor->add_option("--proc-root", proc_root, "procfs mount")->envname("PEAK_PROC_ROOT");
  monitor->add_option("--powercap-root", powercap_root, "powercap sysfs root")
      ->envname("PEAK_POWERCAP_ROOT");
  monitor->add_option("--node", node_name, "Node name recorded in the dataset");
  monitor->add_option("--duration-s", duration_s, "Stop after this many seconds (0: until signal)")
      ->check(CLI::NonNegativeNumber);

  // replay
  ConfigFlags replay_cfg;
  std::string replay_trace;
  std::string replay_out;
  double stop_at_s = -1.0;
  auto* replay = app.add_subcommand("replay", "Replay a trace through the monitor");
  add_config_flags(replay, replay_cfg);
  replay->add_option("--trace", replay_trace, "Trace file")->required()->check(CLI::ExistingFile);
  replay->add_option("--out", replay_out, "Dataset output directory")->required();
  replay->add_option("--stop-at-s", stop_at_s, "Stop at this trace time (negative: trace end)");

  // report
  std::string report_in;
  std::string report_format = "table";
  std::string report_out;
  bool histogram = false;
  auto* report = app.add_subcommand("report", "Roll up a dataset into task energies");
  report->add_option("--in", report_in, "Dataset directory")->required();
  add_format_flags(report, report_format, report_out);
  report->add_flag("--histogram", histogram, "Per-task energy grouped by logical task");

  // evaluate
  std::string eval_in;
  std::optional<double> rapl_total;
  std::optional<double> static_total;
  std::optional<double> eval_beta;
  std::string eval_truth;
  std::string eval_format = "table";
  std::string eval_out;
  auto* evaluate = app.add_subcommand("evaluate", "MAPE of a dataset against node energy");
  evaluate->add_option("--in", eval_in, "Dataset directory")->required();
  evaluate->add_option("--rapl-total", rapl_total, "Override measured node energy (J)");
  evaluate->add_option("--static-total", static_total, "Override node static energy (J)");
  evaluate->add_option("--beta", eval_beta, "Overhead factor in (0, 1]; default 1");
  evaluate->add_option("--truth", eval_truth, "Ground-truth sidecar supplying beta");
  add_format_flags(evaluate, eval_format, eval_out);

  // calibrate
  ConfigFlags calib_cfg;
  std::string calib_trace;
  std::string sweep_text = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9";
  std::optional<double> calib_beta;
  std::string calib_truth;
  std::string calib_format = "table";
  std::string calib_out;
  auto* calibrate = app.add_subcommand("calibrate", "Sweep gamma and pick the lowest MAPE");
  add_config_flags(calibrate, calib_cfg);
  calibrate->add_option("--trace", calib_trace, "Trace file")->required()->check(CLI::ExistingFile);
  calibrate->add_option("--sweep", sweep_text, "Comma-separated gamma values");
  calibrate->add_option("--beta", calib_beta, "Overhead factor in (0, 1]; default 1");
  calibrate->add_option("--truth", calib_truth, "Ground-truth sidecar supplying beta");
  add_format_flags(calibrate, calib_format, calib_out);

  // compare
  ConfigFlags compare_cfg;
  std::string compare_trace;
  std::optional<double> compare_beta;
  std::string compare_truth;
  std::string compare_format = "table";
  std::string compare_out;
  auto* compare = app.add_subcommand("compare", "Compare against the linear CPU-time baseline");
  add_config_flags(compare, compare_cfg);
  compare->add_option("--trace", compare_trace, "Trace file")->required()->check(CLI::ExistingFile);
  compare->add_option("--beta", compare_beta, "Overhead factor in (0, 1]; default 1");
  compare->add_option("--truth", compare_truth, "Ground-truth sidecar supplying per-segment beta");
  add_format_flags(compare, compare_format, compare_out);

  // generate
  std::string scenario_path;
  std::string builtin;
  std::string generate_out;
  std::string truth_out;
  double truth_gamma = 0.3;
  std::uint64_t seed = 1;
  std::size_t tasks = 300;
  auto* generate = app.add_subcommand("generate", "Write a synthetic trace and its ground truth");
  auto* scenario_opt =
      generate->add_option("--scenario", scenario_path, "JSON scenario file")->check(CLI::ExistingFile);
  auto* builtin_opt = generate->add_option("--builtin", builtin, "Built-in scenario")
                          ->check(CLI::IsMember({"staircase", "colocated-load", "short-tasks", "random"}));
  scenario_opt->excludes(builtin_opt);
  generate->add_option("--out", generate_out, "Trace output file")->required();
  generate->add_option("--truth", truth_out, "Ground-truth output (default: <out>.truth)");
  generate->add_option("--truth-gamma", truth_gamma, "Exponent of built-in scenarios")
      ->check(CLI::Range(0.0, 1.0));
  generate->add_option("--seed", seed, "Seed of the random and short-tasks scenarios");
  generate->add_option("--tasks", tasks, "Pod count of the short-tasks scenario");

  app.require_subcommand(0, 1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error[usage]: " << e.what() << "\n";
    return 2;
  }
  if (app.get_subcommands().empty()) {
    err << app.help();
    err << "error[usage]: a subcommand is required\n";
    return 2;
  }

  try {
    if (*monitor) {
      const MonitorConfig config = monitor_cfg.build();
      LiveBackend backend(LiveBackendOptions{proc_root, powercap_root, node_name});
      FilePodSource pods(pods_file);
      g_stop.store(false);
      std::signal(SIGINT, handle_stop_signal);
      std::signal(SIGTERM, handle_stop_signal);
      LiveRunOptions options;
      if (duration_s > 0.0) {
        options.duration = std::chrono::milliseconds(std::llround(duration_s * 1000.0));
      }
      options.stop = &g_stop;
      const RawDataset data = run_live(config, backend, pods, options);
      write_dataset(monitor_out, data);
      out << summary_line(data, monitor_out);
    } else if (*replay) {
      const MonitorConfig config = replay_cfg.build();
      const Trace trace = read_trace_file(replay_trace);
      std::optional<Timestamp> stop;
      if (stop_at_s >= 0.0) stop = seconds_to_timestamp(stop_at_s);
      const RawDataset data = run_replay(config, trace, stop);
      write_dataset(replay_out, data);
      out << summary_line(data, replay_out);
    } else if (*report) {
      const TaskRollup r = rollup(read_dataset(report_in));
      const ReportFormat format = parse_report_format(report_format);
      emit(out,
           histogram ? render_sections(histogram_sections(energy_histogram(r)), format)
                     : render_report(r, format),
           report_out);
    } else if (*evaluate) {
      const TaskRollup r = rollup(read_dataset(eval_in));
      double beta = 1.0;
      if (!eval_truth.empty()) beta = read_truth_file(eval_truth).monitored.beta();
      if (eval_beta) beta = *eval_beta;
      EvalInputs in = eval_inputs(r, beta);
      if (rapl_total) in.measured = *rapl_total;
      if (static_total) in.static_total = *static_total;
      const double value = mape(in);
      ReportSection s{"evaluation",
                      {"attributed_j", "attributed_static_j", "measured_j", "static_j", "beta",
                       "reference_j", "comparable_j", "mape_pct"},
                      {{format_double(in.attributed), format_double(in.attributed_static),
                        format_double(in.measured), format_double(in.static_total),
                        format_double(in.beta), format_double(in.reference()),
                        format_double(in.comparable()), format_double(value)}}};
      emit(out, render_sections({s}, parse_report_format(eval_format)), eval_out);
    } else if (*calibrate) {
      const MonitorConfig config = calib_cfg.build();
      const std::vector<double> sweep = parse_sweep(sweep_text);
      double beta = 1.0;
      if (!calib_truth.empty()) beta = read_truth_file(calib_truth).monitored.beta();
      if (calib_beta) beta = *calib_beta;
      const SweepResult result = calibrate_gamma(read_trace_file(calib_trace), config, sweep, beta);
      emit(out, render_sections(sweep_sections(result), parse_report_format(calib_format)),
           calib_out);
    } else if (*compare) {
      const MonitorConfig config = compare_cfg.build();
      BetaSource beta;
      if (!compare_truth.empty()) {
        const GroundTruth truth = read_truth_file(compare_truth);
        beta.fallback = truth.monitored.beta();
        beta.per_segment = truth.segment_betas();
      }
      if (compare_beta) {
        beta.fallback = *compare_beta;
        beta.per_segment.clear();
      }
      const BaselineComparison c = compare_baseline(read_trace_file(compare_trace), config, beta);
      emit(out, render_sections(comparison_sections(c), parse_report_format(compare_format)),
           compare_out);
    } else if (*generate) {
      Scenario scenario;
      if (!scenario_path.empty()) {
        scenario = load_scenario(scenario_path);
      } else if (builtin == "staircase") {
        scenario = staircase_scenario(truth_gamma);
      } else if (builtin == "colocated-load") {
        scenario = colocated_load_scenario(truth_gamma);
      } else if (builtin == "short-tasks") {
        scenario = short_task_scenario(tasks, seed);
      } else if (builtin == "random") {
        scenario = random_scenario(seed);
      } else {
        throw UsageError("generate needs --scenario or --builtin");
      }
      const GeneratedTrace g = generate_trace(scenario);
      write_trace_file(generate_out, g.trace);
      const std::string truth_path = truth_out.empty() ? generate_out + ".truth" : truth_out;
      write_truth_file(truth_path, g.truth);
      out << fmt::format("{} events -> {}, ground truth -> {}\n", g.trace.events.size(),
                         generate_out, truth_path);
    }
  } catch (const UsageError& e) {
    err << "error[usage]: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    err << "error[usage]: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error[runtime:" << error_kind(e) << "]: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace peak
