#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "oacp/cli.h"
#include "oacp/harness.h"

namespace oacp {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

fs::path ScratchDir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string ReadText(const fs::path& p) {
  std::ifstream in(p);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

// 24 instances of 48 rounds, 6 in the test split.
fs::path SmallDataset(const std::string& name) {
  const fs::path dir = ScratchDir(name);
  GeneratorParams gp;
  gp.T = 48;
  gp.B1 = 4.8;
  gp.Bmax = 12.0;
  WriteDataset(GenerateDataset(gp, 24), (dir / "data").string());
  return dir;
}

ExperimentConfig BaseConfig(const fs::path& dir,
                            std::vector<std::string> algos) {
  json j;
  j["dataset"] = "data";
  j["algorithms"] = algos;
  j["workers"] = 1;
  j["ood_fraction"] = 0.5;
  return ExperimentConfig::FromJson(j, dir.string());
}

TEST(Harness, OptAgainstItselfIsOne) {
  const fs::path dir = SmallDataset("oacp_harness_opt");
  const MetricsReport r = EvaluateSuite(BaseConfig(dir, {"opt"}));
  const AlgorithmMetrics& m = r.test.Get("opt");
  EXPECT_EQ(m.count, 6u);
  EXPECT_DOUBLE_EQ(m.avg, 1.0);
  EXPECT_DOUBLE_EQ(m.cr_emp, 1.0);
}

TEST(Harness, MetricOrdering) {
  const fs::path dir = SmallDataset("oacp_harness_order");
  ExperimentConfig cfg = BaseConfig(
      dir, {"equal", "greedy", "dmd", "oacp", "oacp-plus", "la-oacp"});
  cfg.algorithms.back().params = {{"predictor", "always-max"}};
  cfg.lambda_grid = {0.2, 0.8};
  const MetricsReport r = EvaluateSuite(cfg);
  ASSERT_EQ(r.test.algorithms.size(), 7u);
  for (const SuiteMetrics* s : {&r.test, &r.ood}) {
    for (const AlgorithmMetrics& m : s->algorithms) {
      EXPECT_GE(m.cr_emp, 0.0) << m.algo;
      EXPECT_LE(m.cr_emp, m.avg + 1e-12) << m.algo;
      EXPECT_LE(m.cr_emp, m.avg_of_ratios + 1e-12) << m.algo;
      EXPECT_LE(m.avg, m.max_ratio + 1e-12) << m.algo;
      EXPECT_LE(m.max_ratio, 1.0 + 1e-9) << m.algo;
    }
  }
  EXPECT_NO_THROW(r.test.Get("la-oacp[lambda=0.2,R=0]"));
  EXPECT_NO_THROW(r.test.Get("la-oacp[lambda=0.8,R=0]"));
  EXPECT_EQ(r.test.Get("la-oacp[lambda=0.8,R=0]").violation[0].rate, 0.0);
  EXPECT_GE(r.dp_check.count, 1u);
  EXPECT_LT(r.dp_check.max_abs_diff, 1e-3);
}

TEST(Harness, SummaryIsReproducible) {
  const fs::path dir = SmallDataset("oacp_harness_repro");
  ExperimentConfig cfg = BaseConfig(dir, {"oacp", "dmd", "la-oacp"});
  cfg.algorithms.back().params = {{"predictor", "uniform-random"}};
  cfg.out = (dir / "out").string();
  EvaluateSuite(cfg);
  const std::string first = ReadText(dir / "out" / "summary.json");
  const std::string rows = ReadText(dir / "out" / "per_instance.csv");
  cfg.workers = 3;
  EvaluateSuite(cfg);
  EXPECT_EQ(ReadText(dir / "out" / "summary.json"), first);
  EXPECT_EQ(ReadText(dir / "out" / "per_instance.csv"), rows);
  EXPECT_NE(rows.find("instance_id,algo,F_T,OPT,ratio,violated,ood_flag"),
            std::string::npos);
}

TEST(Harness, ConfigErrors) {
  const fs::path dir = SmallDataset("oacp_harness_errors");
  ExperimentConfig cfg = BaseConfig(dir, {"la-oacp"});
  cfg.algorithms[0].params = {{"predictor", "model"},
                              {"model", (dir / "nope.json").string()}};
  EXPECT_THROW(cfg.Validate(), ConfigError);
  EXPECT_THROW(BaseConfig(dir, {"simplex"}).Validate(), ConfigError);
  ExperimentConfig missing = BaseConfig(dir, {"oacp"});
  missing.dataset = (dir / "absent").string();
  EXPECT_THROW(missing.Validate(), ConfigError);
  EXPECT_THROW(ExperimentConfig::Load((dir / "none.json").string()),
               ConfigError);
  ExperimentConfig dup = BaseConfig(dir, {"oacp", "oacp"});
  EXPECT_THROW(ExpandAlgorithms(dup), ConfigError);
}

TEST(Harness, ConfigPathsRelativeToFile) {
  const fs::path dir = SmallDataset("oacp_harness_paths");
  std::ofstream(dir / "exp.json")
      << R"({"dataset": "data", "algorithms": ["oacp"], "out": "res"})";
  const ExperimentConfig cfg = ExperimentConfig::Load((dir / "exp.json").string());
  EXPECT_EQ(fs::path(cfg.dataset), dir / "data");
  EXPECT_EQ(fs::path(cfg.out), dir / "res");
}

TEST(Harness, ParallelForCoversRangeAndPropagates) {
  std::vector<int> hit(100, 0);
  ParallelFor(100, 4, [&](std::size_t i) { hit[i] += 1; });
  EXPECT_EQ(std::count(hit.begin(), hit.end(), 1), 100);
  EXPECT_THROW(ParallelFor(10, 3,
                           [](std::size_t i) {
                             if (i == 7) throw InputError("boom");
                           }),
               InputError);
}

int Cli(const std::vector<std::string>& args, std::string* out = nullptr) {
  std::ostringstream o, e;
  const int code = RunCli(args, o, e);
  if (out) *out = o.str();
  return code;
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(Cli({}), kExitUsage);
  EXPECT_EQ(Cli({"bogus"}), kExitUsage);
  EXPECT_EQ(Cli({"run", "--algo", "oacp"}), kExitUsage);
  EXPECT_EQ(Cli({"generate", "--n", "many"}), kExitUsage);
  EXPECT_EQ(Cli({"evaluate", "--config", "/nonexistent/exp.json"}),
            kExitRuntime);
}

TEST(Cli, EndToEndUnderOneMinute) {
  const auto start = std::chrono::steady_clock::now();
  const fs::path dir = ScratchDir("oacp_cli_e2e");
  const std::string data = (dir / "data").string();
  ASSERT_EQ(Cli({"generate", "--n", "12", "--out", data, "--seed", "5"}),
            kExitOk);
  std::string out;
  const std::string first =
      (dir / "data" / "instances" / (ReadDataset(data).ids[0] + ".csv"))
          .string();
  ASSERT_EQ(Cli({"run", "--instance", first, "--algo", "oacp-plus"}, &out),
            kExitOk);
  EXPECT_GT(json::parse(out).at("F_T").get<double>(), 0.0);
  ASSERT_EQ(Cli({"opt", "--instance", first}, &out), kExitOk);
  EXPECT_GT(json::parse(out).at("OPT").get<double>(), 0.0);

  std::ofstream(dir / "exp.json")
      << R"({"dataset": "data", "algorithms": ["oacp", "oacp-plus", "dmd",
             {"name": "la-oacp", "params": {"predictor": "always-max"}}],
             "out": "res"})";
  ASSERT_EQ(Cli({"evaluate", "--config", (dir / "exp.json").string()}),
            kExitOk);
  ASSERT_TRUE(fs::exists(dir / "res" / "summary.json"));
  ASSERT_EQ(Cli({"report", "--summary", (dir / "res" / "summary.json").string()},
                &out),
            kExitOk);
  EXPECT_NE(out.find("oacp-plus"), std::string::npos);
  EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::seconds(60));
}

}  // namespace
}  // namespace oacp
