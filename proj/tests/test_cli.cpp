#include "spinwalk/bessel.hpp"
#include "spinwalk/report.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace spinwalk;
namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("spinwalk_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  int run(const std::string& args) {
    const std::string cmd =
        std::string(SPINWALK_CLI_PATH) + " " + args + " > " + path("stdout.txt") + " 2> " + path("stderr.txt");
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string read(const std::string& name) const {
    std::ifstream in(path(name), std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  void write(const std::string& name, const std::string& text) const {
    std::ofstream out(path(name), std::ios::binary);
    out << text;
  }

  // Runs `args` with --threads 1 and --threads 3 and checks the named
  // outputs are byte-identical.
  void expect_thread_invariant(const std::string& args, const std::vector<std::string>& outputs) {
    std::vector<std::string> first;
    for (int t : {1, 3}) {
      std::string a = args;
      for (const auto& o : outputs) {
        const std::string target = o + "." + std::to_string(t);
        const auto pos = a.find("@" + o);
        ASSERT_NE(pos, std::string::npos) << o;
        a.replace(pos, o.size() + 1, path(target));
      }
      ASSERT_EQ(run(a + " --threads " + std::to_string(t)), 0) << read("stderr.txt");
      for (std::size_t i = 0; i < outputs.size(); ++i) {
        const std::string content = read(outputs[i] + "." + std::to_string(t));
        EXPECT_FALSE(content.empty()) << outputs[i];
        if (t == 1) first.push_back(content);
        else EXPECT_EQ(content, first[i]) << args << " output " << outputs[i];
      }
    }
  }

  fs::path dir_;
};

std::vector<TestReport> load_reports(const std::string& text) {
  std::vector<TestReport> out;
  for (const auto& j : Json::parse(text)) out.push_back(report_from_json(j));
  return out;
}

std::size_t line_count(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_F(CliTest, ValidateBuiltinModelPasses) {
  ASSERT_EQ(run("validate --model rotation4d --a 0.3,0.5,0.6 --geometry --replicas 200 --out " + path("v.json")), 0)
      << read("stderr.txt");
  const auto reports = load_reports(read("v.json"));
  EXPECT_GT(reports.size(), 5u);
  EXPECT_TRUE(all_pass(reports));
}

TEST_F(CliTest, WalkOutputShapeAndSeedDependence) {
  ASSERT_EQ(run("walk --model rotation2d --b 0.5 --n 50 --replicas 7 --seed 3 --out " + path("a.csv")), 0);
  const std::string a = read("a.csv");
  EXPECT_EQ(a.substr(0, a.find('\n')), "replica,x1,x2");
  EXPECT_EQ(line_count(a), 8u);
  ASSERT_EQ(run("walk --model rotation2d --b 0.5 --n 50 --replicas 7 --seed 4 --out " + path("b.csv")), 0);
  EXPECT_NE(read("b.csv"), a);
  ASSERT_EQ(run("walk --model rotation2d --b 0.5 --n 50 --replicas 7 --seed 3"), 0);
  EXPECT_EQ(read("stdout.txt"), a);
}

TEST_F(CliTest, EveryCommandIsThreadInvariant) {
  expect_thread_invariant("walk --model rotation4d --a 0.8 --n 300 --replicas 40 --seed 9 --out @w", {"w"});
  expect_thread_invariant("marginal --model rotation2d --n 200 --replicas 300 --seed 9 --out @m --report @r",
                          {"m", "r"});
  expect_thread_invariant("diffusion --model rotation2d --dt 0.01 --replicas 30 --seed 9 --out @x", {"x"});
  expect_thread_invariant(
      "stationary --model rotation2d --replicas 400 --chains 8 --burn-in 2 --thin 0.2 --dt 0.01 --seed 9 --out @s "
      "--density @p --report @r",
      {"s", "p", "r"});
  expect_thread_invariant("exit-law --walk --model rotation2d --n 100 --replicas 300 --seed 9 --out @e --report @r",
                          {"e", "r"});
  expect_thread_invariant("excursion --model rotation2d --max-lo 0.5 --max-hi 1 --n 6 --seed 9 --out @x --report @r",
                          {"x", "r"});
  expect_thread_invariant("nonuniq --model rotation4d --a 0.5 --dt 0.01 --seed 9 --out @n --report @r", {"n", "r"});
}

TEST_F(CliTest, ExitLawClosedFormRows) {
  ASSERT_EQ(run("exit-law --delta 3 --a 1 --lambda 0.5,2 --out " + path("e.csv")), 0) << read("stderr.txt");
  std::istringstream in(read("e.csv"));
  std::string header, row;
  std::getline(in, header);
  EXPECT_EQ(header, "lambda,closed_form,mc_estimate,std_err,n_replicas,source");
  for (double lam : {0.5, 2.0}) {
    std::getline(in, row);
    const double cf = std::stod(row.substr(row.find(',') + 1));
    EXPECT_NEAR(cf, exit_time_laplace(3.0, 1.0, lam), 1e-15);
    EXPECT_EQ(row.substr(row.rfind(',') + 1), "closed_form");
  }
}

TEST_F(CliTest, ConfigFileAndFlagPrecedence) {
  write("cfg.toml", "[model]\nfamily = \"rotation2d\"\nb = 0.5\n[run]\nseed = 5\nn = 40\nreplicas = 6\n");
  ASSERT_EQ(run("walk --config " + path("cfg.toml") + " --out " + path("c.csv")), 0) << read("stderr.txt");
  ASSERT_EQ(run("walk --model rotation2d --b 0.5 --seed 5 --n 40 --replicas 6 --out " + path("f.csv")), 0);
  EXPECT_EQ(read("c.csv"), read("f.csv"));
  ASSERT_EQ(run("walk --config " + path("cfg.toml") + " --seed 6 --out " + path("o.csv")), 0);
  ASSERT_EQ(run("walk --model rotation2d --b 0.5 --seed 6 --n 40 --replicas 6 --out " + path("g.csv")), 0);
  EXPECT_EQ(read("o.csv"), read("g.csv"));
  EXPECT_NE(read("o.csv"), read("c.csv"));
}

TEST_F(CliTest, UnknownConfigKeyIsRejectedWithLine) {
  write("bad.toml", "[run]\nseed = 5\nspeed = 2\n");
  EXPECT_EQ(run("walk --config " + path("bad.toml") + " --out " + path("w.csv")), 2);
  EXPECT_NE(read("stderr.txt").find("bad.toml:3:"), std::string::npos) << read("stderr.txt");
  EXPECT_FALSE(fs::exists(path("w.csv")));
  EXPECT_FALSE(fs::exists(path("w.csv.partial")));
}

TEST_F(CliTest, FailedCommandLeavesNoOutputs) {
  EXPECT_EQ(run("stationary --model rotation4d --a 0.5 --replicas 10 --out " + path("s.csv") + " --density " +
                path("p.csv")),
            2);
  for (const char* f : {"s.csv", "s.csv.partial", "p.csv", "p.csv.partial"}) EXPECT_FALSE(fs::exists(path(f))) << f;
  EXPECT_EQ(run("nonuniq --model isotropic --out " + path("n.csv")), 2);
  EXPECT_FALSE(fs::exists(path("n.csv")));
  EXPECT_EQ(run("walk --model rotation2d --b=-1 --out " + path("w.csv")), 2);
  EXPECT_FALSE(fs::exists(path("w.csv")));
}

TEST_F(CliTest, StationaryReportUsesOneDrawPerChain) {
  ASSERT_EQ(run("stationary --model rotation2d --chains 400 --replicas 2000 --burn-in 30 --dt 0.01 --seed 2 --out " +
                path("s.csv") + " --report " + path("r.json")),
            0)
      << read("stderr.txt");
  const auto reports = load_reports(read("r.json"));
  ASSERT_EQ(reports.size(), 2u);
  EXPECT_EQ(reports[1].n, 400u);
  EXPECT_TRUE(all_pass(reports));
  ASSERT_EQ(run("stationary --model rotation2d --chains 8 --replicas 40 --burn-in 1 --dt 0.01 --out " + path("t.csv") +
                " --report " + path("q.json")),
            0);
  EXPECT_EQ(load_reports(read("q.json")).size(), 1u);
}

TEST_F(CliTest, UsageErrorsAreNonzero) {
  EXPECT_NE(run(""), 0);
  EXPECT_NE(run("teleport"), 0);
  EXPECT_NE(run("walk --frobnicate 3"), 0);
  EXPECT_EQ(run("walk --help"), 0);
}

TEST_F(CliTest, ReportAggregatesAndSetsExitCode) {
  write("ok.json", to_json(std::vector<TestReport>{at_most("a", 0.1, 1.0, 10, "x")}).dump());
  write("one.json", to_json(at_least("b", 2.0, 1.0, 10, "y")).dump());
  write("bad.json", to_json(std::vector<TestReport>{at_most("c", 3.0, 1.0, 10, "z")}).dump());
  ASSERT_EQ(run("report " + path("ok.json") + " " + path("one.json") + " --out " + path("all.json")), 0);
  const auto all = load_reports(read("all.json"));
  ASSERT_EQ(all.size(), 2u);
  EXPECT_EQ(all[1].name, "b");
  EXPECT_NE(read("stderr.txt").find("2/2 checks passed"), std::string::npos);
  EXPECT_EQ(run("report " + path("ok.json") + " " + path("bad.json")), 1);
  EXPECT_NE(read("stderr.txt").find("1/2 checks passed"), std::string::npos);
  write("junk.json", "{not json");
  EXPECT_EQ(run("report " + path("junk.json")), 2);
}
