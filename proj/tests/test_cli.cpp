#include "checks.hpp"
#include "cli.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace fletcher::tools {
namespace {

using nlohmann::json;

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

TEST(Cli, SolveToyConverges) {
  const CliRun r = cli({"solve", "--problem", "toy1d", "--sigma", "1"});
  ASSERT_EQ(r.code, kConverged) << r.err;
  const json j = json::parse(r.out);
  EXPECT_EQ(j["schema"], 1);
  EXPECT_EQ(j["report"]["status"], "converged");
  EXPECT_NEAR(j["report"]["x"][0].get<double>(), 1.0, 1e-8);
  EXPECT_TRUE(j["report"]["counters"].contains("nAv"));
}

TEST(Cli, SolveBelowThresholdIsUnbounded) {
  const CliRun r = cli({"solve", "--problem", "toy1d", "--sigma", "0.25"});
  EXPECT_EQ(r.code, kNotConverged);
  EXPECT_EQ(json::parse(r.out)["report"]["status"], "unbounded");
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(cli({"solve", "--problem", "toy1d", "--hessian", "B3"}).code, kUsage);
  EXPECT_EQ(cli({"solve"}).code, kUsage);
  EXPECT_EQ(cli({"frobnicate"}).code, kUsage);
  EXPECT_EQ(cli({"solve", "--problem", "nope"}).code, kUsage);
  EXPECT_EQ(cli({"solve", "--problem", "toy1d", "--criterion", "error", "--backend", "iterative",
                 "--preconditioner", "none"}).code,
            kUsage);
}

TEST(Cli, ThresholdToy) {
  const CliRun r = cli({"threshold", "--problem", "toy1d"});
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = json::parse(r.out);
  EXPECT_NEAR(j["sigma_star_implicit"].get<double>(), 0.5, 1e-10);
  EXPECT_NEAR(j["sigma_star_explicit"].get<double>(), 0.5, 1e-10);
}

TEST(Cli, SweepWritesOneRowPerEtaAndCriterion) {
  const CliRun r = cli({"sweep", "--problem", "invpoisson-fd", "--grid", "16", "--sigma", "1e-2", "--etas",
                     "1e-2,1e-4,1e-6,1e-8,1e-10"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream in(r.out);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, kSweepHeader);
  int rows = 0, residual = 0;
  while (std::getline(in, line)) {
    ++rows;
    if (line.find(",residual,") != std::string::npos) ++residual;
  }
  EXPECT_EQ(rows, 10);
  EXPECT_EQ(residual, 5);
}

TEST(Cli, FailedSweepRowsAreStarred) {
  const CliRun r = cli({"sweep", "--problem", "toy1d", "--sigma", "0.25", "--etas", "1e-6", "--criteria",
                     "residual"});
  EXPECT_EQ(r.code, kNotConverged);
  EXPECT_NE(r.out.find("*"), std::string::npos);
}

TEST(Cli, OutFlagWritesFile) {
  const auto path = std::filesystem::temp_directory_path() / "fletcher_cli_test.json";
  const CliRun r = cli({"solve", "--problem", "toy1d", "--out", path.string()});
  ASSERT_EQ(r.code, 0);
  EXPECT_TRUE(r.out.empty());
  std::ifstream in(path);
  EXPECT_EQ(json::parse(in)["report"]["status"], "converged");
  std::filesystem::remove(path);
}

TEST(Cli, DeterministicGivenSeed) {
  const CliRun a = cli({"solve", "--problem", "randqp", "--seed", "4", "--sigma", "10"});
  const CliRun b = cli({"solve", "--problem", "randqp", "--seed", "4", "--sigma", "10"});
  EXPECT_EQ(a.out, b.out);
}

TEST(Cli, CheckRandqpSeed7Passes) {
  const CliRun r = cli({"check", "--problem", "randqp", "--seed", "7"});
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_TRUE(json::parse(r.out)["passed"].get<bool>());
}

TEST(Checks, RandomInteriorPointIsInterior) {
  const ProblemPtr p = make_problem("hs113");
  for (std::uint64_t s = 0; s < 20; ++s) {
    EXPECT_TRUE(p->bounds().strictly_interior(random_interior_point(*p, s)));
  }
}

}  // namespace
}  // namespace fletcher::tools
