#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("stepfdr_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  CliResult run(const std::string& args) {
    const auto out = dir_ / "stdout.txt";
    const auto err = dir_ / "stderr.txt";
    const std::string cmd = "cd '" + dir_.string() + "' && '" + STEPFDR_CLI + "' " + args + " > '" + out.string() +
                            "' 2> '" + err.string() + "'";
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
  }

  fs::path write(const std::string& name, const std::string& text) {
    const auto p = dir_ / name;
    std::ofstream(p, std::ios::binary) << text;
    return p;
  }

  fs::path dir_;
};

const std::string kFiveP = "id,p\nh1,0.01\nh2,0.02\nh3,0.1\nh4,0.3\nh5,0.6\n";

}  // namespace

TEST_F(Cli, ApplyMarksRejections) {
  const auto in = write("pv.csv", kFiveP);
  const auto r = run("apply --procedure su:linear --alpha 0.25 --input pv.csv --output out.csv");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(dir_ / "out.csv"),
            "id,p,weighted_p,rejected\nh1,0.01,0.01,1\nh2,0.02,0.02,1\nh3,0.1,0.1,1\nh4,0.3,0.3,0\nh5,0.6,0.6,0\n"
            "# r_hat=3 pihat0=NA\n");
  EXPECT_NE(r.err.find("FDR <= alpha * Pi(H) = 0.25"), std::string::npos);
  // at alpha 0.05 only the two smallest pass
  const auto r2 = run("--quiet apply --procedure su:linear --alpha 0.05 --input pv.csv");
  ASSERT_EQ(r2.code, 0);
  EXPECT_NE(r2.out.find("# r_hat=2 pihat0=NA"), std::string::npos);
  EXPECT_TRUE(r2.err.empty());
}

TEST_F(Cli, ApplyAdaptiveReportsPihat) {
  write("pv.csv", kFiveP);
  const auto r = run("--quiet apply --procedure adaptive:0.05,0.05 --alpha 0.1 --input pv.csv");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("pihat0=0.8"), std::string::npos);
}

TEST_F(Cli, ApplyWeightedInput) {
  write("pv.csv", "id,p,pi,lambda\na,0.01,0.5,1\nb,0.04,0.25,2\n");
  const auto r = run("--quiet apply --procedure su --alpha 0.1 --input pv.csv");
  ASSERT_EQ(r.code, 0) << r.err;
  // weighted p-values p / (m pi)
  EXPECT_NE(r.out.find("a,0.01,0.01,"), std::string::npos);
  EXPECT_NE(r.out.find("b,0.04,0.08,"), std::string::npos);
}

TEST_F(Cli, ExitCodes) {
  write("pv.csv", kFiveP);
  const auto missing = run("apply --procedure su:linear --input pv.csv");
  EXPECT_EQ(missing.code, 2);
  EXPECT_NE(missing.err.find("alpha"), std::string::npos);
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
  EXPECT_EQ(run("apply --procedure zz --alpha 0.1 --input pv.csv").code, 2);
  EXPECT_EQ(run("apply --procedure su --alpha 0.1 --input nope.csv").code, 1);
  write("bad.csv", "id,p\na,2\n");
  EXPECT_EQ(run("apply --procedure su --alpha 0.1 --input bad.csv").code, 1);
  EXPECT_EQ(run("--help").code, 0);
}

TEST_F(Cli, ShapesTable) {
  const auto r = run("shapes --m 1000 --shapes linear,by,prior:uniform --out shapes.csv");
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream in(slurp(dir_ / "shapes.csv"));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "r,linear,by,prior:uniform");
  std::size_t rows = 0;
  std::string last;
  while (std::getline(in, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 3);
    last = line;
  }
  EXPECT_EQ(rows, 1000u);
  EXPECT_EQ(last.substr(0, 7), "1000,1,");

  const auto g = run("shapes --m 10 --shapes prior:gauss:mu=5,sigma=2,holm");
  ASSERT_EQ(g.code, 0) << g.err;
  EXPECT_EQ(g.out.substr(0, g.out.find('\n')), "r,\"prior:gauss:mu=5,sigma=2\",holm");
}

TEST_F(Cli, SimulateIsDeterministic) {
  write("cfg.json", R"({"procedures": ["su:linear", "rank:bl_rs"],
    "models": [{"kind": "independent", "m": 20, "m0": 16}, {"kind": "equicorrelated", "m": 20, "m0": 16, "rho": 0.5}],
    "alpha": [0.1], "n_trials": 500, "seed": 1})");
  ASSERT_EQ(run("--quiet simulate --config cfg.json").code, 0);
  const auto csv1 = slurp(dir_ / "report.csv");
  const auto json1 = slurp(dir_ / "report.json");
  ASSERT_EQ(run("--quiet --threads 3 simulate --config cfg.json --csv b.csv --json b.json").code, 0);
  EXPECT_EQ(csv1, slurp(dir_ / "b.csv"));
  EXPECT_EQ(json1, slurp(dir_ / "b.json"));
  EXPECT_EQ(std::count(csv1.begin(), csv1.end(), '\n'), 5);
  const auto j = nlohmann::json::parse(json1);
  EXPECT_EQ(j["reports"].size(), 4u);
  ASSERT_EQ(run("--quiet --seed 2 simulate --config cfg.json --csv c.csv --json c.json").code, 0);
  EXPECT_NE(csv1, slurp(dir_ / "c.csv"));
  write("broken.json", "{");
  EXPECT_EQ(run("simulate --config broken.json").code, 1);
}

TEST_F(Cli, CheckModes) {
  write("pv.csv", kFiveP);
  auto r = run("--seed 3 check --mode sc --procedure su --alpha 0.25 --input pv.csv");
  ASSERT_EQ(r.code, 0) << r.err;
  auto j = nlohmann::json::parse(r.out);
  EXPECT_TRUE(j["self_consistent"].get<bool>());
  EXPECT_TRUE(j["equality"].get<bool>());
  EXPECT_EQ(j["volume"].get<double>(), 3.0);

  r = run("--seed 3 check --mode mono --procedure sd --alpha 0.25 --input pv.csv --n-perturb 100");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(nlohmann::json::parse(r.out)["violations"].get<int>(), 0);

  r = run("--seed 3 check --mode dc --sampler half --c 2 --n 100000");
  ASSERT_EQ(r.code, 0) << r.err;
  j = nlohmann::json::parse(r.out);
  EXPECT_TRUE(j["estimates"][0]["violation_flagged"].get<bool>());

  r = run("--seed 3 check --mode dc --procedure su --model independent:m=10,m0=8 --n 5000 --out dc.json");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(nlohmann::json::parse(slurp(dir_ / "dc.json"))["pass"].get<bool>());

  r = run("--seed 3 check --mode prds --procedure su --model equicorrelated:m=10,m0=8,rho=0.5 --r 3 --n 5000 "
          "--u 0.2,0.5,1");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(nlohmann::json::parse(r.out)["curve"].size(), 3u);

  EXPECT_EQ(run("check --mode sc --procedure su").code, 2);
  EXPECT_EQ(run("check --mode xyz").code, 2);
  EXPECT_EQ(run("check --mode sc --procedure rank:holm --input pv.csv").code, 2);
}
