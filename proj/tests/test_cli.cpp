#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "levypide/app.hpp"

using namespace levypide;
using namespace levypide::app;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Each test writes below its own scratch root through LEVYPIDE_OUTPUT_ROOT.
class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    root_ = fs::temp_directory_path() / ("levypide_cli_" + std::string(info->name()));
    fs::remove_all(root_);
    fs::create_directories(root_);
    setenv("LEVYPIDE_OUTPUT_ROOT", root_.c_str(), 1);
  }
  void TearDown() override {
    unsetenv("LEVYPIDE_OUTPUT_ROOT");
    fs::remove_all(root_);
  }

  fs::path config(const std::string& name, const std::string& text) {
    const auto p = root_ / (name + ".yaml");
    std::ofstream(p) << text;
    return p;
  }

  ExitCode run(const std::string& command, const fs::path& cfg) {
    std::ostringstream log;
    const auto code = run_experiment(command, cfg.string(), log);
    log_ = log.str();
    return code;
  }

  nlohmann::json report(const std::string& dir, const std::string& name) {
    return nlohmann::json::parse(slurp(root_ / dir / (name + "_report.json")));
  }

  fs::path root_;
  std::string log_;
};

const char* kBurgers = R"(seed: 7
problem:
  builtin: burgers1d
  params: {nu: 0.5}
  phi: {kind: sin}
grid: {points: 17, horizon: -0.125, dt: 0.0625}
solver: {particles: 500, substeps: 1}
output: {directory: burgers, name: b}
)";

}  // namespace

TEST(ParseConfig, RequiresSeed) {
  EXPECT_THROW(parse_config("problem: {builtin: burgers1d}\n"), ConfigError);
}

TEST(ParseConfig, RejectsUnknownKeys) {
  EXPECT_THROW(parse_config("seed: 1\nproblem: {builtin: burgers1d}\nbogus: 3\n"), ConfigError);
  EXPECT_THROW(parse_config("seed: 1\nproblem: {builtin: burgers1d}\nsolver: {particle: 3}\n"), ConfigError);
  EXPECT_THROW(parse_config("seed: 1\nproblem: {builtin: heat}\n"), ConfigError);
}

TEST(ParseConfig, BurgersDefaults) {
  const auto cfg = parse_config("seed: 3\nproblem: {builtin: burgers1d, params: {nu: 0.25}}\n");
  EXPECT_EQ(cfg.seed, 3u);
  EXPECT_EQ(cfg.solver.seed, 3u);
  EXPECT_TRUE(cfg.solver.space.periodic(0));
  EXPECT_EQ(cfg.solver.space.points(0), 129);
  EXPECT_TRUE(cfg.global_intent);
}

TEST(ParseConfig, StableScaleAndMultiplierAreExclusive) {
  EXPECT_THROW(parse_config("seed: 1\nproblem: {builtin: linear_fk, triple: {kind: stable, alpha: 1.5, scale: 1, "
                            "multiplier: 1}}\n"),
               ConfigError);
}

TEST(OutputDirectory, RootOverride) {
  unsetenv("LEVYPIDE_OUTPUT_ROOT");
  OutputConfig o;
  o.directory = "/abs/place";
  EXPECT_EQ(output_directory(o), "/abs/place");
  setenv("LEVYPIDE_OUTPUT_ROOT", "/tmp/r", 1);
  EXPECT_EQ(output_directory(o), "/tmp/r/place");
  o.directory = "rel/x";
  EXPECT_EQ(output_directory(o), "/tmp/r/rel/x");
  unsetenv("LEVYPIDE_OUTPUT_ROOT");
}

TEST_F(CliTest, SolveWritesFieldAndReport) {
  ASSERT_EQ(run("solve", config("b", kBurgers)), ExitCode::ok) << log_;
  EXPECT_TRUE(fs::exists(root_ / "burgers" / "b_field.csv"));
  EXPECT_TRUE(fs::exists(root_ / "burgers" / "b_meta.json"));
  const auto r = report("burgers", "b");
  EXPECT_EQ(r["status"], "ok");
  EXPECT_EQ(r["exit_code"], 0);
  EXPECT_TRUE(r["error"].is_null());
}

TEST_F(CliTest, SolveIsDeterministic) {
  const auto cfg = config("b", kBurgers);
  ASSERT_EQ(run("solve", cfg), ExitCode::ok);
  const auto first = slurp(root_ / "burgers" / "b_field.csv");
  const auto first_report = slurp(root_ / "burgers" / "b_report.json");
  ASSERT_EQ(run("solve", cfg), ExitCode::ok);
  EXPECT_FALSE(first.empty());
  EXPECT_EQ(first, slurp(root_ / "burgers" / "b_field.csv"));
  EXPECT_EQ(first_report, slurp(root_ / "burgers" / "b_report.json"));
}

TEST_F(CliTest, GeneralCouplingWithSmallAlphaIsModeError) {
  const auto cfg = config("q", R"(seed: 1
problem:
  builtin: custom-table
  mode: quasilinear_general
  triple: {kind: stable, alpha: 0.8, multiplier: 0.5}
  G: {kind: linear, x: [-1, 1], y: [0.5, 1.5]}
  phi: {kind: sin}
grid: {points: 21, horizon: -0.125, dt: 0.0625}
solver: {particles: 200}
output: {directory: q, name: q}
)");
  EXPECT_EQ(run("solve", cfg), ExitCode::mode_error);
  const auto r = report("q", "q");
  EXPECT_EQ(r["status"], "failed");
  EXPECT_EQ(r["exit_code"], 4);
  EXPECT_FALSE(r["error"].is_null());
}

TEST_F(CliTest, BadConfigStillWritesReport) {
  const auto cfg = config("bad", "seed: 1\nproblem: {builtin: burgers1d}\nmystery: 1\n");
  EXPECT_EQ(run("solve", cfg), ExitCode::error);
  EXPECT_EQ(report("out", "run")["exit_code"], 1);
}

TEST_F(CliTest, UnknownCommand) {
  EXPECT_EQ(run("dance", config("b", kBurgers)), ExitCode::error);
}

TEST_F(CliTest, FlowTestPasses) {
  const auto cfg = config("f", R"(seed: 5
problem: {builtin: linear_fk, phi: {kind: zero}}
flow: {coupling: drift_only, coefficient: sin, a: 1.0, paths: 2000, dt: 0.0625, t1: -0.5, t2: -0.25}
output: {directory: f, name: f}
)");
  ASSERT_EQ(run("flow-test", cfg), ExitCode::ok) << log_;
  const auto r = report("f", "f");
  EXPECT_TRUE(r["flow"]["passed"].get<bool>());
  EXPECT_EQ(r["flow"]["pathwise_gap"].get<double>(), 0.0);
}

TEST_F(CliTest, OracleWritesField) {
  const auto cfg = config("o", R"(seed: 2
problem: {builtin: linear_fk, triple: {kind: stable, alpha: 1.5, multiplier: 0.5}, phi: {kind: cos}}
oracle: {kind: convolution, modes: 32, t: -0.25, output_dt: 0.125}
output: {directory: o, name: o}
)");
  ASSERT_EQ(run("oracle", cfg), ExitCode::ok) << log_;
  const auto field = read_field((root_ / "o" / "o_oracle").string());
  EXPECT_EQ(field.time().nodes(), 3);
  // cos decays by exp(-0.5 |t|) under the multiplier-0.5 symbol.
  const int zero = 16;
  EXPECT_NEAR(field.at(2, zero), std::exp(-0.125), 1e-12);
}
