#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(ICLUST_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("iclust_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST(Cli, HelpAndUsage) {
  EXPECT_EQ(run("--help"), 0);
  EXPECT_NE(run(""), 0);
  EXPECT_NE(run("simulate --preset does-not-exist"), 0);
}

TEST(Cli, Fig2DppCentreWritesThreeFiles) {
  const auto dir = scratch("fig2");
  ASSERT_EQ(run("simulate --preset fig2-dpp-centre --seed 5 --out " + dir.string()), 0);
  int csv = 0;
  for (const auto& e : fs::directory_iterator(dir)) csv += e.path().extension() == ".csv" ? 1 : 0;
  EXPECT_EQ(csv, 3);
  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  EXPECT_EQ(manifest["seed"], 5);
  EXPECT_EQ(manifest["files"].size(), 3u);
  EXPECT_EQ(slurp(dir / "dpp_rep1.csv").substr(0, 4), "x,y\n");
}

TEST(Cli, SameSeedIsByteIdenticalAcrossThreadCounts) {
  const auto a = scratch("det_a");
  const auto b = scratch("det_b");
  ASSERT_EQ(run("simulate --preset case1-poisson --replicates 3 --seed 9 --threads 1 --out " + a.string()), 0);
  ASSERT_EQ(run("simulate --preset case1-poisson --replicates 3 --seed 9 --threads 3 --out " + b.string()), 0);
  for (const char* f : {"poisson_rep1.csv", "poisson_rep2.csv", "poisson_rep3.csv"}) {
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  // The manifest records the thread count through the config; patterns must not.
  EXPECT_NE(slurp(a / "poisson_rep1.csv"), slurp(a / "poisson_rep2.csv"));
}

TEST(Cli, ConfigErrorsExitWithTwo) {
  const auto dir = scratch("cfg");
  const auto bad = dir / "bad.json";
  std::ofstream(bad) << "{\n  \"model\": {\n    \"count\": {\"law\": \"poisson\", \"mean\": 1}\n  },\n  \"run\": {\"replicates\": 0}\n}\n";
  EXPECT_EQ(run("simulate --config " + bad.string()), 2);
  const auto broken = dir / "broken.json";
  std::ofstream(broken) << "{ \"model\": ";
  EXPECT_EQ(run("simulate --config " + broken.string()), 2);
  EXPECT_EQ(run("simulate --config " + (dir / "missing.json").string()), 2);
  EXPECT_EQ(run("simulate --preset case1-poisson --replicates 0 --out " + dir.string()), 2);
}

TEST(Cli, NumericErrorsExitWithThree) {
  const auto dir = scratch("num");
  const auto cfg = dir / "dpp.json";
  std::ofstream(cfg) << R"({"model": {"count": {"law": "poisson", "mean": 0.5},
    "displacement": {"kind": "gaussian", "sigma": 0.05},
    "noise": {"kind": "dpp", "rho": 50, "tau": 0.5}},
    "run": {"generations": 1}, "output": {"directory": ")" << (dir / "out").string() << R"("}})";
  EXPECT_EQ(run("simulate --config " + cfg.string()), 3);
  const auto crit = dir / "crit.json";
  std::ofstream(crit) << R"({"model": {"count": {"law": "poisson", "mean": 1.0},
    "displacement": {"kind": "gaussian", "sigma": 0.05}, "noise": {"kind": "none"}},
    "theory": {"limit": true}, "output": {"directory": ")" << (dir / "out2").string() << R"("}})";
  EXPECT_EQ(run("theory --config " + crit.string()), 3);
}

TEST(Cli, TheoryWritesCurvesKernelsAndGamma) {
  const auto dir = scratch("theory");
  ASSERT_EQ(run("theory --preset case2-poisson --out " + dir.string()), 0);
  EXPECT_EQ(slurp(dir / "poisson_limit.csv").substr(0, 4), "r,g\n");
  const auto report = nlohmann::json::parse(slurp(dir / "theory.json"));
  const double gamma = report["variants"]["poisson"]["limit"]["gamma"];
  EXPECT_NEAR(gamma, 0.463, 5e-4);
  ASSERT_EQ(run("theory --preset fig1 --out " + dir.string()), 0);
  for (const char* f : {"dpp_g1.csv", "poisson_g1.csv", "wper_g1.csv", "dpp_g1.json"}) EXPECT_TRUE(fs::exists(dir / f)) << f;
}

TEST(Cli, ValidateWritesVerdicts) {
  const auto dir = scratch("validate");
  const auto cfg = dir / "v.json";
  std::ofstream(cfg) << R"({"model": {"count": {"law": "poisson", "mean": 0.3},
    "displacement": {"kind": "gaussian", "sigma": 0.1}, "noise": {"kind": "poisson", "rho": 70}},
    "run": {"mode": "equilibrium", "replicates": 3},
    "validate": {"null_simulations": 39},
    "output": {"directory": ")" << dir.string() << R"(", "statistics": ["pcf", "L", "J"], "r_grid": {"steps": 32}}})";
  ASSERT_EQ(run("validate --config " + cfg.string()), 0);
  const auto report = nlohmann::json::parse(slurp(dir / "verdicts.json"));
  for (const char* s : {"pcf", "L", "J"}) {
    EXPECT_TRUE(report["variants"]["default"]["statistics"].contains(s)) << s;
  }
  EXPECT_EQ(slurp(dir / "custom_L_envelope.csv").substr(0, 17), "r,lo,hi,observed\n");
}
