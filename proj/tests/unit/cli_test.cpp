#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "experiments/config.hpp"
#include "experiments/experiments.hpp"
#include "jpose/errors.hpp"

namespace jpose::cli {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "jpose_cli_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

void spit(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

int run_cli(const std::string& args) {
  const std::string cmd = std::string(JPOSE_CLI_PATH) + " " + args + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string run_cli_stderr(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(JPOSE_CLI_PATH) + " " + args + " 2>" + log.string();
  if (std::system(cmd.c_str()) == -1) return {};
  return slurp(log);
}

TEST(Config, DefaultsAndOverrides) {
  const Config cfg = parse_config(Experiment::kComposeSweep,
                                  R"({"seed": 9, "rho": 0.2, "steps": [3, 4], "containment": "position"})", ".");
  EXPECT_EQ(cfg.run.seed, 9u);
  EXPECT_EQ(cfg.compose.rho, 0.2);
  EXPECT_EQ(cfg.compose.steps, (std::vector<std::size_t>{3, 4}));
  EXPECT_EQ(cfg.compose.containment, ContainmentMode::kPositionOnly);
  EXPECT_EQ(cfg.compose.samples, 10000u);
  EXPECT_EQ(cfg.compose.probability, 0.999);
}

TEST(Config, Rejections) {
  const auto bad = [](Experiment e, const std::string& text) {
    EXPECT_THROW(parse_config(e, text, "."), ConfigError) << text;
  };
  bad(Experiment::kComposeSweep, R"({"sampels": 10})");
  bad(Experiment::kComposeSweep, R"({"samples": -3})");
  bad(Experiment::kComposeSweep, R"({"samples": 0})");
  bad(Experiment::kComposeSweep, R"({"rho": 1.5})");
  bad(Experiment::kComposeSweep, R"({"methods": ["lie", "ssc"]})");
  bad(Experiment::kComposeSweep, R"({"sweeps": ["steps", "kappa"]})");
  bad(Experiment::kComposeSweep, R"({"probability": 1.0})");
  bad(Experiment::kComposeSweep, R"({"experiment": "convert-demo"})");
  bad(Experiment::kComposeSweep, "{not json");
  bad(Experiment::kRelposeAlphaSweep, R"({"alphas": [1, -1]})");
  bad(Experiment::kRelposeAlphaSweep, R"({"marginal_diagonal": [1, 2, 3]})");
  bad(Experiment::kSlamRelpose, R"({"graph": "/nonexistent/file.g2o"})");
  bad(Experiment::kSlamRelpose, R"({"grid_world": {"poses": 1}})");
  bad(Experiment::kConvertDemo, R"({"ut": {"mode": "fancy"}})");
  bad(Experiment::kSolveGraph, R"({"max_iterations": 0})");
}

TEST(Config, MissingFileNamesPath) {
  try {
    load_config(Experiment::kSolveGraph, "/nonexistent/config.json");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/config.json"), std::string::npos);
  }
}

TEST(ComposeSweep, SingleStepTinyNoiseIsCalibrated) {
  ComposeSweepConfig cfg;
  cfg.sweeps = {"steps"};
  cfg.steps = {1};
  cfg.fixed_sigma = 1e-3;
  cfg.samples = 100000;
  const auto r = run_compose_sweep(cfg, RunOptions{});
  ASSERT_EQ(r.points.size(), 3u);
  for (const auto& p : r.points) EXPECT_NEAR(p.containment, 0.999, 0.001) << method_name(p.method);
}

TEST(ComposeSweep, TimingColumnOnlyOnRequest) {
  ComposeSweepConfig cfg;
  cfg.sweeps = {"steps"};
  cfg.steps = {2};
  cfg.samples = 500;
  EXPECT_FALSE(run_compose_sweep(cfg, RunOptions{}).points[0].wall_ms.has_value());
  cfg.record_timing = true;
  EXPECT_TRUE(run_compose_sweep(cfg, RunOptions{}).points[0].wall_ms.has_value());
}

TEST(ComposeSweep, RotationNoiseHurtsMoreThanTranslationNoise) {
  ComposeSweepConfig cfg;
  cfg.sweeps = {"sigma_r", "sigma_t"};
  cfg.sigma_r = {1, 5};
  cfg.sigma_t = {1, 5};
  cfg.methods = {Method::kLieCorrelated};
  const auto r = run_compose_sweep(cfg, RunOptions{});
  ASSERT_EQ(r.points.size(), 4u);
  const double rotation_drop = r.points[0].containment - r.points[1].containment;
  const double translation_drop = r.points[2].containment - r.points[3].containment;
  EXPECT_GT(rotation_drop, translation_drop);
}

TEST(ComposeSweep, WorkerCountDoesNotChangeResults) {
  ComposeSweepConfig cfg;
  cfg.sweeps = {"steps"};
  cfg.steps = {3, 6};
  cfg.samples = 9000;
  RunOptions one, four;
  four.jobs = 4;
  std::ostringstream a, b;
  write_table(a, run_compose_sweep(cfg, one).table());
  write_table(b, run_compose_sweep(cfg, four).table());
  EXPECT_EQ(a.str(), b.str());
}

TEST(RelposeAlphaSweep, ZeroAlphaAndOrdering) {
  RelposeAlphaConfig cfg;
  cfg.alphas = {0, 0.5, 1, 2, 4};
  const auto r = run_relpose_alpha_sweep(cfg, RunOptions{});
  EXPECT_LT((r.relative_mean.translation() - Eigen::Vector3d(2.12132, 0, 0)).norm(), 1e-5);
  ASSERT_EQ(r.rows.size(), 10u);
  // Only rounding in T_1^-1 T_2 remains at alpha = 0.
  EXPECT_LT(r.rows[0].cov_error, 1e-20);
  EXPECT_LT(r.rows[1].cov_error, 1e-20);
  for (std::size_t k = 2; k < r.rows.size(); k += 2) {
    EXPECT_LT(r.rows[k].cov_error, r.rows[k + 1].cov_error);
    EXPECT_GE(r.rows[k + 1].cov_error, r.rows[k - 1].cov_error);
  }
}

TEST(ConvertDemo, ZeroCovarianceCollapsesLoci) {
  ConvertDemoConfig cfg;
  cfg.covariance.setZero();
  cfg.samples = 100;
  const auto r = run_convert_demo(cfg, RunOptions{});
  ASSERT_FALSE(r.loci.empty());
  for (const auto& p : r.loci) {
    EXPECT_NEAR(p.x, 3.0, 1e-12);
    EXPECT_NEAR(p.y, 3.0, 1e-12);
  }
  EXPECT_FALSE(r.count("converted").fraction.has_value());
}

TEST(ConvertDemo, ConvertedEnclosesTrueSamples) {
  const auto r = run_convert_demo(ConvertDemoConfig{}, RunOptions{});
  EXPECT_GE(*r.count("converted").fraction, 0.93);
  EXPECT_LT(*r.count("ssc").fraction, *r.count("converted").fraction);
  EXPECT_EQ(r.sigma_points, 13u);
}

TEST(SolveGraph, ConsistentTriangle) {
  const fs::path dir = scratch("triangle");
  spit(dir / "triangle.g2o",
       "VERTEX_SE2 0 0 0 0\nVERTEX_SE2 1 1.2 0.1 0.3\nVERTEX_SE2 2 0.8 1.1 1.4\n"
       "EDGE_SE2 0 1 1 0 1.5707963267948966 1 0 0 1 0 1\n"
       "EDGE_SE2 1 2 1 0 1.5707963267948966 1 0 0 1 0 1\n"
       "EDGE_SE2 0 2 1 1 3.1415926535897931 1 0 0 1 0 1\n");
  SolveGraphConfig cfg;
  cfg.graph.path = dir / "triangle.g2o";
  const auto r = run_solve_graph(cfg, RunOptions{});
  EXPECT_TRUE(r.solution.report.converged);
  EXPECT_LT(r.solution.report.final_chi2, 1e-12);
  const Table t = r.table();
  ASSERT_EQ(t.rows.size(), 4u);
  EXPECT_EQ(std::get<std::string>(t.rows.back()[0]), "report");
}

TEST(SlamRelpose, SmallWorldRecordsEveryPair) {
  SlamRelposeConfig cfg;
  cfg.graph.grid_world.poses = 60;
  cfg.offsets = {5, 80};
  cfg.pairs_per_offset = 7;
  cfg.samples = 200;
  const auto r = run_slam_relpose(cfg, RunOptions{});
  EXPECT_EQ(r.poses, 60u);
  EXPECT_EQ(r.rows.size(), 21u);  // offset 80 exceeds the graph
  for (const auto& row : r.rows) EXPECT_EQ(row.status, "ok");
  ASSERT_NE(r.overall(Method::kLieCorrelated, "cov_error"), nullptr);
  EXPECT_EQ(r.overall(Method::kLieCorrelated, "cov_error")->count, 7u);
}

TEST(Cli, ExitCodes) {
  const fs::path dir = scratch("exit");
  EXPECT_EQ(run_cli(""), 2);
  EXPECT_EQ(run_cli("no-such-experiment"), 2);
  EXPECT_EQ(run_cli("solve-graph --config " + (dir / "absent.json").string()), 2);
  spit(dir / "bad.json", R"({"graph": "missing.g2o"})");
  const std::string message = run_cli_stderr("solve-graph --config " + (dir / "bad.json").string(), dir / "log");
  EXPECT_NE(message.find((dir / "missing.g2o").string()), std::string::npos) << message;
  EXPECT_EQ(run_cli("solve-graph --config " + (dir / "bad.json").string()), 2);
  spit(dir / "broken.g2o", "VERTEX_SE2 0 0 0\n");
  spit(dir / "broken.json", R"({"graph": "broken.g2o"})");
  EXPECT_EQ(run_cli("solve-graph --config " + (dir / "broken.json").string()), 1);
  spit(dir / "ok.json", R"({"samples": 100, "alphas": [1]})");
  EXPECT_EQ(run_cli("relpose-alpha-sweep --config " + (dir / "ok.json").string() + " --out " +
                    (dir / "out").string()),
            0);
  EXPECT_TRUE(fs::exists(dir / "out" / "relpose_alpha_sweep.csv"));
  EXPECT_TRUE(fs::exists(dir / "out" / "plot_relpose_alpha_sweep.py"));
}

TEST(Cli, FlagsOverrideConfig) {
  const fs::path dir = scratch("flags");
  spit(dir / "cfg.json", R"({"samples": 300, "alphas": [1], "seed": 5, "output_dir": "from_file"})");
  ASSERT_EQ(run_cli("relpose-alpha-sweep --config " + (dir / "cfg.json").string()), 0);
  ASSERT_EQ(run_cli("relpose-alpha-sweep --config " + (dir / "cfg.json").string() + " --seed 5 --out " +
                    (dir / "flag").string()),
            0);
  ASSERT_EQ(run_cli("relpose-alpha-sweep --config " + (dir / "cfg.json").string() + " --seed 6 --out " +
                    (dir / "other").string()),
            0);
  const std::string from_file = slurp(dir / "from_file" / "relpose_alpha_sweep.csv");
  EXPECT_FALSE(from_file.empty());
  EXPECT_EQ(from_file, slurp(dir / "flag" / "relpose_alpha_sweep.csv"));
  EXPECT_NE(from_file, slurp(dir / "other" / "relpose_alpha_sweep.csv"));
}

}  // namespace
}  // namespace jpose::cli
