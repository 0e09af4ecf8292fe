#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "comrope/cli.hpp"

namespace comrope::cli {
namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(std::initializer_list<const char*> args) {
  std::vector<const char*> argv{"comrope"};
  argv.insert(argv.end(), args.begin(), args.end());
  std::ostringstream out, err;
  const int code = run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream is(text);
  for (std::string line; std::getline(is, line);) out.push_back(line);
  return out;
}

TEST(Cli, RequiresSubcommand) {
  EXPECT_EQ(invoke({}).code, kExitUsage);
  EXPECT_EQ(invoke({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(invoke({"--help"}).code, kExitOk);
}

TEST(Cli, VerifyCommutingVariantPasses) {
  const auto r = invoke({"verify", "--variant", "ld", "--d", "64", "--h", "2", "--b", "4", "--axes", "2", "--seed", "7"});
  EXPECT_EQ(r.code, kExitOk) << r.err;
  const auto doc = nlohmann::json::parse(r.out);
  EXPECT_EQ(doc["seed"], 7);
  EXPECT_TRUE(doc["ok"].get<bool>());
  ASSERT_EQ(doc["reports"].size(), 4u);
  for (const auto& rep : doc["reports"]) {
    EXPECT_TRUE(rep["passed"].get<bool>()) << rep["suite"];
    EXPECT_EQ(rep["expected"], "pass");
  }
}

TEST(Cli, VerifyLieREFailureIsExpected) {
  const auto r =
      invoke({"verify", "--variant", "liere", "--d", "64", "--h", "2", "--b", "4", "--axes", "2", "--seed", "7"});
  EXPECT_EQ(r.code, kExitOk) << r.err;
  const auto doc = nlohmann::json::parse(r.out);
  EXPECT_FALSE(doc["commuting_expected"].get<bool>());
  const auto& rope = doc["reports"][0];
  EXPECT_EQ(rope["suite"], "rope-equation");
  EXPECT_FALSE(rope["passed"].get<bool>());
  EXPECT_EQ(rope["expected"], "fail");
  EXPECT_NE(r.err.find("(expected)"), std::string::npos);
}

TEST(Cli, VerifyIsDeterministic) {
  const auto a = invoke({"verify", "--variant", "liere", "--d", "32", "--h", "1", "--b", "4", "--seed", "3"});
  const auto b = invoke({"verify", "--variant", "liere", "--d", "32", "--h", "1", "--b", "4", "--seed", "3"});
  EXPECT_EQ(a.out, b.out);
}

TEST(Cli, VerifyCsvSummary) {
  const auto r = invoke({"verify", "--variant", "ap", "--d", "32", "--h", "1", "--b", "4", "--seed", "1", "--format", "csv"});
  const auto rows = lines(r.out);
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_EQ(rows[0], "suite,seed,trials,tol,max_residual,passed");
}

TEST(Cli, VerifyToleranceOverrideCanFailCommutingSuite) {
  const auto r = invoke({"verify", "--variant", "ld", "--d", "32", "--h", "1", "--b", "4", "--seed", "1", "--tol", "0"});
  EXPECT_EQ(r.code, kExitSuiteFailure);
}

TEST(Cli, InvalidDimensionsExitTwo) {
  const auto r = invoke({"verify", "--variant", "ld", "--d", "64", "--h", "2", "--b", "5", "--seed", "1"});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("error"), std::string::npos);
  EXPECT_EQ(invoke({"verify", "--variant", "vanilla", "--b", "4", "--seed", "1"}).code, kExitUsage);
  EXPECT_EQ(invoke({"verify", "--variant", "ap", "--d", "12", "--h", "1", "--b", "4", "--seed", "1"}).code,
            kExitUsage);
}

TEST(Cli, UnknownVariantExitsTwo) {
  EXPECT_EQ(invoke({"verify", "--variant", "mixed", "--seed", "1"}).code, kExitUsage);
  EXPECT_EQ(invoke({"train-toy", "--variant", "mixed", "--seed", "1"}).code, kExitUsage);
  EXPECT_EQ(invoke({"train-toy", "--variant", "vanilla", "--b", "2", "--seed", "1"}).code, kExitUsage);
}

TEST(Cli, BadFormatRejected) {
  EXPECT_EQ(invoke({"verify", "--variant", "ld", "--format", "xml", "--seed", "1"}).code, kExitUsage);
}

TEST(Cli, BenchParamsOnlySweep) {
  const auto r = invoke({"bench", "--sweep-b", "2,4,8", "--d", "768", "--h", "12", "--axes", "2", "--layers", "12",
                         "--params-only"});
  EXPECT_EQ(r.code, kExitOk) << r.err;
  const auto rows = lines(r.out);
  ASSERT_EQ(rows.size(), 1u + 3 * 3);
  EXPECT_EQ(rows[0], "variant,d,h,b,N,n,repeats,median_ns,per_token_ns,L,extra_params");
  EXPECT_EQ(rows[1], "liere,768,12,2,2,,,,,12,36864");
  EXPECT_EQ(rows[9], "ld,768,12,8,2,,,,,12,76032");
  EXPECT_TRUE(r.err.empty());
}

TEST(Cli, BenchTimesWhenAsked) {
  const auto r = invoke({"bench", "--variant", "ap", "--d", "32", "--h", "2", "--b", "4", "--n", "4", "--seed", "1",
                         "--format", "json"});
  EXPECT_EQ(r.code, kExitOk) << r.err;
  const auto doc = nlohmann::json::parse(r.out);
  ASSERT_EQ(doc.size(), 1u);
  EXPECT_GT(doc[0]["median_ns"].get<double>(), 0.0);
  EXPECT_EQ(doc[0]["repeats"], 5);
}

TEST(Cli, BenchEmptySweepRejected) {
  EXPECT_EQ(invoke({"bench", "--sweep-b", "", "--params-only"}).code, kExitUsage);
  EXPECT_EQ(invoke({"bench", "--sweep-b", "2,,4", "--params-only"}).code, kExitUsage);
}

TEST(Cli, AblateOffsetTable) {
  const auto r = invoke({"ablate-offset", "--d", "32", "--h", "2", "--b", "4", "--seed", "5"});
  EXPECT_EQ(r.code, kExitOk) << r.err;
  const auto rows = lines(r.out);
  ASSERT_EQ(rows.size(), 1u + 8);
  EXPECT_EQ(rows[0], "variant,rho,max_logit_drift");
  EXPECT_EQ(rows[1], "ld,0,0");
  EXPECT_EQ(rows[5], "liere,0,0");
  EXPECT_EQ(r.out, invoke({"ablate-offset", "--d", "32", "--h", "2", "--b", "4", "--seed", "5"}).out);
}

TEST(Cli, TrainToyZeroStepsHeaderOnly) {
  const auto r = invoke({"train-toy", "--variant", "ld", "--steps", "0", "--seed", "1"});
  EXPECT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(r.out, "step,loss,grad_norm\n");
}

TEST(Cli, TrainToyTrace) {
  const auto r = invoke({"train-toy", "--variant", "ld", "--steps", "3", "--seed", "1"});
  EXPECT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(lines(r.out).size(), 4u);
  EXPECT_NE(r.err.find("final loss"), std::string::npos);
}

TEST(Cli, OutputFileWrittenAtomically) {
  const auto path = std::filesystem::temp_directory_path() / "comrope_cli_test.csv";
  std::filesystem::remove(path);
  const std::string p = path.string();
  const auto r = invoke({"train-toy", "--variant", "ap", "--steps", "2", "--seed", "1", "--out", p.c_str()});
  EXPECT_EQ(r.code, kExitOk) << r.err;
  EXPECT_TRUE(r.out.empty());
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "step,loss,grad_norm");
  std::filesystem::remove(path);
}

TEST(Cli, SeedFromEnvironmentAndFlagPrecedence) {
  ::setenv("COMROPE_SEED", "11", 1);
  const auto env = invoke({"verify", "--variant", "ld", "--d", "32", "--h", "1", "--b", "4"});
  const auto flag = invoke({"verify", "--variant", "ld", "--d", "32", "--h", "1", "--b", "4", "--seed", "12"});
  ::setenv("COMROPE_SEED", "junk", 1);
  const auto junk = invoke({"verify", "--variant", "ld", "--d", "32", "--h", "1", "--b", "4"});
  ::unsetenv("COMROPE_SEED");
  EXPECT_EQ(nlohmann::json::parse(env.out)["seed"], 11);
  EXPECT_EQ(nlohmann::json::parse(flag.out)["seed"], 12);
  EXPECT_EQ(junk.code, kExitUsage);
}

TEST(Cli, RandomSeedIsPrinted) {
  ::unsetenv("COMROPE_SEED");
  const auto r = invoke({"verify", "--variant", "ld", "--d", "32", "--h", "1", "--b", "4", "--trials", "2"});
  EXPECT_EQ(r.code, kExitOk);
  const auto pos = r.err.find("seed: ");
  ASSERT_NE(pos, std::string::npos);
  const auto printed = std::stoull(r.err.substr(pos + 6));
  EXPECT_EQ(nlohmann::json::parse(r.out)["seed"].get<std::uint64_t>(), printed);
}

TEST(CliBinary, ExitCodes) {
  const std::string tool = COMROPE_TOOL;
  const auto status = [&](const std::string& args) {
    const int raw = std::system((tool + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  };
  EXPECT_EQ(status("verify --variant ld --d 64 --h 2 --b 4 --axes 2 --seed 7"), 0);
  EXPECT_EQ(status("verify --variant ld --d 64 --h 2 --b 5 --seed 7"), 2);
  EXPECT_EQ(status("--help"), 0);
}

}  // namespace
}  // namespace comrope::cli
