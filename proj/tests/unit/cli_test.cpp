#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "peak/cli.hpp"
#include "peak/dataset.hpp"

namespace {

namespace fs = std::filesystem;

const fs::path kData = PEAK_TEST_DATA;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "peak");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = peak::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("peak_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    for (const char* v : {"PEAK_GAMMA", "PEAK_RAPL_MS", "PEAK_POLL_MS", "PEAK_PROC_ROOT",
                          "PEAK_POWERCAP_ROOT"}) {
      unsetenv(v);
    }
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path dir_;
};

TEST_F(Cli, NoSubcommandIsUsageError) {
  const Result r = run({});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("error[usage]"), std::string::npos);
  EXPECT_NE(r.err.find("replay"), std::string::npos);
}

TEST_F(Cli, UnknownFlagAndBadValues) {
  EXPECT_EQ(run({"replay", "--trace", (kData / "min.trace").string(), "--out", dir_.string(),
                 "--bogus"})
                .code,
            2);
  EXPECT_EQ(run({"replay", "--trace", (kData / "min.trace").string(), "--out", dir_.string(),
                 "--gamma", "1.5"})
                .code,
            2);
  EXPECT_EQ(run({"replay", "--trace", (kData / "min.trace").string(), "--out", dir_.string(),
                 "--rapl-interval-ms", "0"})
                .code,
            2);
  EXPECT_EQ(run({"report", "--in", dir_.string(), "--format", "xml"}).code, 2);
  EXPECT_EQ(run({"calibrate", "--trace", (kData / "min.trace").string(), "--sweep", "0.1,x"}).code, 2);
  EXPECT_EQ(run({"replay", "--out", dir_.string()}).code, 2);
}

TEST_F(Cli, HelpListsDefaults) {
  const Result r = run({"--help-all"});
  EXPECT_EQ(r.code, 0);
  for (const char* s : {"--gamma", "0.3", "--rapl-interval-ms", "2000", "--poll-interval-ms", "5000",
                        "--idle-window-s", "30", "--mode", "faithful", "--pod-filter", "^nf-",
                        "PEAK_GAMMA", "PEAK_PROC_ROOT", "PEAK_POWERCAP_ROOT", "--histogram",
                        "--sweep", "--stop-at-s", "--truth-gamma"}) {
    EXPECT_NE(r.out.find(s), std::string::npos) << s;
  }
}

TEST_F(Cli, ReplayThenReportMatchesGolden) {
  const Result replay = run({"replay", "--trace", (kData / "min.trace").string(), "--out", dir_.string()});
  ASSERT_EQ(replay.code, 0) << replay.err;
  const Result table = run({"report", "--in", dir_.string()});
  ASSERT_EQ(table.code, 0) << table.err;
  EXPECT_EQ(table.out, slurp(kData / "min.report.txt"));
  const Result csv = run({"report", "--in", dir_.string(), "--format", "csv"});
  EXPECT_EQ(csv.out, slurp(kData / "min.report.csv"));
}

TEST_F(Cli, ReplayIsByteIdentical) {
  const fs::path a = dir_ / "a", b = dir_ / "b";
  ASSERT_EQ(run({"replay", "--trace", (kData / "min.trace").string(), "--out", a.string()}).code, 0);
  ASSERT_EQ(run({"replay", "--trace", (kData / "min.trace").string(), "--out", b.string()}).code, 0);
  for (const char* f : {peak::kStaticFile, peak::kPodsFile, peak::kLedgersFile, peak::kRecordsFile}) {
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
}

TEST_F(Cli, EnvironmentBelowFlags) {
  setenv("PEAK_GAMMA", "0.5", 1);
  ASSERT_EQ(run({"replay", "--trace", (kData / "min.trace").string(), "--out", dir_.string()}).code, 0);
  EXPECT_NE(slurp(dir_ / peak::kStaticFile).find("gamma=0.5"), std::string::npos);
  ASSERT_EQ(run({"replay", "--trace", (kData / "min.trace").string(), "--out", dir_.string(),
                 "--gamma", "0.7"})
                .code,
            0);
  EXPECT_NE(slurp(dir_ / peak::kStaticFile).find("gamma=0.7"), std::string::npos);
  setenv("PEAK_RAPL_MS", "1000", 1);
  ASSERT_EQ(run({"replay", "--trace", (kData / "min.trace").string(), "--out", dir_.string()}).code, 0);
  EXPECT_NE(slurp(dir_ / peak::kStaticFile).find("rapl_ms=1000"), std::string::npos);
  unsetenv("PEAK_GAMMA");
  unsetenv("PEAK_RAPL_MS");
}

TEST_F(Cli, RuntimeErrorsAreCategorized) {
  const Result missing = run({"report", "--in", (dir_ / "nothing").string()});
  EXPECT_EQ(missing.code, 1);
  EXPECT_EQ(missing.err.rfind("error[runtime:dataset]", 0), 0u) << missing.err;

  ASSERT_EQ(run({"replay", "--trace", (kData / "min.trace").string(), "--out", dir_.string()}).code, 0);
  const Result zero = run({"evaluate", "--in", dir_.string(), "--rapl-total", "0"});
  EXPECT_EQ(zero.code, 1);
  EXPECT_EQ(zero.err.rfind("error[runtime:metric]", 0), 0u) << zero.err;

  const fs::path bad = dir_ / "bad.trace";
  std::ofstream(bad) << "not-a-trace\n";
  const Result parse = run({"replay", "--trace", bad.string(), "--out", (dir_ / "o").string()});
  EXPECT_EQ(parse.code, 1);
  EXPECT_EQ(parse.err.rfind("error[runtime:parse]", 0), 0u) << parse.err;
  // Exactly one line.
  EXPECT_EQ(std::count(parse.err.begin(), parse.err.end(), '\n'), 1);
}

TEST_F(Cli, EvaluateWithBeta) {
  ASSERT_EQ(run({"replay", "--trace", (kData / "min.trace").string(), "--out", dir_.string()}).code, 0);
  const Result r = run({"evaluate", "--in", dir_.string(), "--rapl-total", "1000", "--static-total",
                        "300", "--beta", "0.97", "--format", "csv"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("mape_pct"), std::string::npos);
}

TEST_F(Cli, GenerateCalibrateCompare) {
  const fs::path trace = dir_ / "stair.trace";
  ASSERT_EQ(run({"generate", "--builtin", "staircase", "--truth-gamma", "0.5", "--out", trace.string()}).code, 0);
  EXPECT_TRUE(fs::exists(trace.string() + ".truth"));
  const Result cal = run({"calibrate", "--trace", trace.string(), "--truth", trace.string() + ".truth",
                          "--sweep", "0.3,0.5,0.7", "--format", "csv"});
  ASSERT_EQ(cal.code, 0) << cal.err;
  EXPECT_NE(cal.out.find("selected"), std::string::npos);

  const Result cmp = run({"compare", "--trace", trace.string()});
  ASSERT_EQ(cmp.code, 0) << cmp.err;
  EXPECT_NE(cmp.out.find("linear"), std::string::npos);

  const Result conflict = run({"generate", "--builtin", "random", "--scenario",
                               (kData / "scenarios/two_pods.json").string(), "--out", trace.string()});
  EXPECT_EQ(conflict.code, 2);
  EXPECT_EQ(run({"generate", "--out", trace.string()}).code, 2);
}

TEST_F(Cli, LiveMonitorAgainstFixtureRoots) {
  setenv("PEAK_PROC_ROOT", (kData / "proc").c_str(), 1);
  setenv("PEAK_POWERCAP_ROOT", (kData / "powercap").c_str(), 1);
  const Result r = run({"monitor", "--pods", (kData / "pods.tl").string(), "--out", dir_.string(),
                        "--node", "fixture", "--idle-window-s", "0.2", "--rapl-interval-ms", "100",
                        "--poll-interval-ms", "100", "--duration-s", "0.5"});
  unsetenv("PEAK_PROC_ROOT");
  unsetenv("PEAK_POWERCAP_ROOT");
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string pods = slurp(dir_ / peak::kPodsFile);
  EXPECT_NE(pods.find("uid=7f3c9a2e-1b4d-4c8e-9a0f-2d6e5b7c8a91"), std::string::npos);
  EXPECT_NE(pods.find("pid=4242"), std::string::npos);
  EXPECT_NE(pods.find("pid=4243"), std::string::npos);
  EXPECT_EQ(pods.find("coredns"), std::string::npos);
  EXPECT_FALSE(slurp(dir_ / peak::kRecordsFile).empty());
  EXPECT_EQ(run({"report", "--in", dir_.string()}).code, 0);
}

TEST_F(Cli, LiveMonitorBadRootIsStartupError) {
  setenv("PEAK_POWERCAP_ROOT", (kData / "nope").c_str(), 1);
  const Result r = run({"monitor", "--pods", (kData / "pods.tl").string(), "--out", dir_.string(),
                        "--duration-s", "0.1", "--idle-window-s", "0.1"});
  unsetenv("PEAK_POWERCAP_ROOT");
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(r.err.rfind("error[runtime:startup]", 0), 0u) << r.err;
}

}  // namespace
