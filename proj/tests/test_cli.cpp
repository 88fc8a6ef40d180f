#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "json.hpp"
#include "spherefit/cli.hpp"
#include "spherefit/error.hpp"
#include "spherefit/experiments.hpp"
#include "spherefit/model.hpp"

namespace fs = std::filesystem;
using namespace spherefit;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "spherefit");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::size_t count_lines(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("spherefit_cli_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
    ::unsetenv("SPHEREFIT_SEED");
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, GenerateRowCountAndSidecar) {
  const Result r = run({"generate", "--n", "3", "--seed", "5", "--out", path("pts.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string text = slurp(path("pts.csv"));
  EXPECT_EQ(count_lines(text), 3u);
  EXPECT_EQ(std::count(text.begin(), text.end(), ','), 6);
  const auto side = nlohmann::json::parse(slurp(path("pts.csv.json")));
  EXPECT_EQ(side["seed"], 5);
  EXPECT_EQ(side["n"], 3);
  EXPECT_EQ(side["spec"]["radius"], 50.0);
}

TEST_F(Cli, GenerateIsDeterministic) {
  ASSERT_EQ(run({"generate", "--n", "200", "--seed", "9", "--out", path("a.xyz"), "--format", "xyz"}).code, 0);
  ASSERT_EQ(run({"generate", "--n", "200", "--seed", "9", "--out", path("b.xyz"), "--format", "xyz"}).code, 0);
  EXPECT_EQ(slurp(path("a.xyz")), slurp(path("b.xyz")));
  ASSERT_EQ(run({"generate", "--n", "200", "--seed", "10", "--out", path("c.xyz"), "--format", "xyz"}).code, 0);
  EXPECT_NE(slurp(path("a.xyz")), slurp(path("c.xyz")));
}

TEST_F(Cli, SeedFromEnvironment) {
  ::setenv("SPHEREFIT_SEED", "9", 1);
  ASSERT_EQ(run({"generate", "--n", "20", "--out", path("env.csv")}).code, 0);
  ::unsetenv("SPHEREFIT_SEED");
  ASSERT_EQ(run({"generate", "--n", "20", "--seed", "9", "--out", path("flag.csv")}).code, 0);
  EXPECT_EQ(slurp(path("env.csv")), slurp(path("flag.csv")));
}

TEST_F(Cli, GenerateThenFitReadsAllPoints) {
  ASSERT_EQ(run({"generate", "--n", "750", "--spec-preset", "half", "--out", path("half.csv")}).code, 0);
  EXPECT_EQ(cli::read_points_file(path("half.csv")).rows(), 750);
  const Result r = run({"fit", path("half.csv"), "--algorithm", "prm"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["n"], 751);
  EXPECT_EQ(j["algorithm"], "prm");
}

TEST_F(Cli, SpecFile) {
  const DistributionSpec spec{make_sphere(Vector::Constant(2, 1.0), 3.0), ShellLaw{0.05}, CompleteRegion{}};
  std::ofstream(path("spec.json")) << nlohmann::json(spec).dump();
  ASSERT_EQ(run({"generate", "--spec", path("spec.json"), "--n", "100", "--out", path("d2.csv")}).code, 0);
  const Matrix pts = cli::read_points_file(path("d2.csv"));
  EXPECT_EQ(pts.cols(), 2);
  EXPECT_LE(((pts.rowwise() - Vector::Constant(2, 1.0).transpose()).rowwise().norm().maxCoeff()), 3.0 * 1.05 + 1e-12);
}

TEST_F(Cli, NoiseFreeFit) {
  Rng rng = make_rng(3);
  std::ofstream file(path("exact.csv"));
  file.precision(17);
  file << "# exact sphere, center (1, 2, 3), radius 10\n";
  for (int i = 0; i < 600; ++i) {
    const Vector u = sample_unit_direction(CompleteRegion{}, 3, rng);
    file << 1 + 10 * u[0] << ", " << 2 + 10 * u[1] << "\t" << 3 + 10 * u[2] << "\n";
    if (i == 10) file << "\n";
  }
  file.close();
  for (const std::string alg : {"averaged", "prm", "backfit"}) {
    const Result r = run({"fit", path("exact.csv"), "--algorithm", alg});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_NEAR(j["theta_bar"]["center"][0].get<double>(), 1.0, 1e-6) << alg;
    EXPECT_NEAR(j["theta_bar"]["center"][1].get<double>(), 2.0, 1e-6) << alg;
    EXPECT_NEAR(j["theta_bar"]["center"][2].get<double>(), 3.0, 1e-6) << alg;
    EXPECT_NEAR(j["theta_bar"]["radius"].get<double>(), 10.0, 1e-6) << alg;
  }
}

TEST_F(Cli, MalformedRowNamesTheLine) {
  std::ofstream(path("bad.csv")) << "1,2,3\n4,5,6\n7,oops,9\n";
  const Result r = run({"fit", path("bad.csv")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("line 3"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("oops"), std::string::npos) << r.err;

  std::istringstream ragged("1 2 3\n4 5\n");
  try {
    cli::read_points(ragged);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Parse);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST_F(Cli, MissingInput) {
  EXPECT_EQ(run({"fit", path("nope.csv")}).code, 1);
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"fit", path("nope.csv"), "--algorithm", "sgd"}).code, 1);
}

TEST_F(Cli, DivergentRmExitsTwo) {
  int diverged = 0;
  for (int seed = 1; seed <= 5; ++seed) {
    const std::string file = path("t1_" + std::to_string(seed) + ".csv");
    ASSERT_EQ(run({"generate", "--n", "2000", "--seed", std::to_string(seed), "--out", file}).code, 0);
    const Result r = run({"fit", file, "--algorithm", "rm", "--c-gamma", "10", "--alpha", "0.51"});
    ASSERT_TRUE(r.code == 0 || r.code == 2) << r.err;
    if (r.code == 2) ++diverged;
  }
  EXPECT_GE(diverged, 3);
}

TEST_F(Cli, ConfidenceOutput) {
  ASSERT_EQ(run({"generate", "--n", "2000", "--out", path("c.csv")}).code, 0);
  const Result r = run({"fit", path("c.csv"), "--confidence", "0.95"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_NEAR(j["confidence"]["threshold"].get<double>(), 9.4877, 1e-4);
  EXPECT_EQ(j["confidence"]["shape"].size(), 4u);
  EXPECT_EQ(run({"fit", path("c.csv"), "--confidence", "1.5"}).code, 1);
}

TEST_F(Cli, EmptyPlanPrintsUsage) {
  std::ofstream(path("empty.json")) << "";
  const Result r = run({"experiment", "--plan", path("empty.json"), "--out", path("x")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("--plan"), std::string::npos);
  std::ofstream(path("obj.json")) << "{}";
  EXPECT_EQ(run({"experiment", "--plan", path("obj.json"), "--out", path("x")}).code, 1);
  EXPECT_EQ(run({"experiment", "--out", path("x")}).code, 1);
}

TEST_F(Cli, PlanFile) {
  const nlohmann::json plan = {{"spec", nlohmann::json(whole_sphere_spec())},
                               {"sample_sizes", {300}},
                               {"schedules", {{{"c_gamma", 1.0}, {"alpha", 0.75}}}},
                               {"replications", 3},
                               {"algorithms", {"averaged", "backfit"}},
                               {"master_seed", 4}};
  std::ofstream(path("plan.json")) << plan.dump();
  const Result r = run({"experiment", "--plan", path("plan.json"), "--out", path("plan_out")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(count_lines(slurp(path("plan_out.csv"))), 3u);
}

TEST_F(Cli, TablePresetsHaveFifteenCells) {
  for (const std::string preset : {"table1", "table2"}) {
    const Result r = run({"experiment", "--preset", preset, "--reps", "2", "--out", path(preset)});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(count_lines(slurp(path(preset + ".csv"))), 16u);
    EXPECT_TRUE(fs::exists(path(preset + ".json")));
  }
}

TEST_F(Cli, ExperimentRerunIsByteIdentical) {
  ASSERT_EQ(run({"experiment", "--preset", "table2", "--reps", "3", "--seed", "8", "--out", path("a")}).code, 0);
  ASSERT_EQ(run({"experiment", "--preset", "table2", "--reps", "3", "--seed", "8", "--workers", "1", "--out",
                 path("b")})
                .code,
            0);
  EXPECT_EQ(slurp(path("a.csv")), slurp(path("b.csv")));
}

TEST_F(Cli, NormalityAndDecayOutputs) {
  Result r = run({"normality", "--n", "300", "--reps", "25", "--out", path("norm")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(count_lines(slurp(path("norm.csv"))), 5u);
  for (int k = 0; k < 4; ++k) {
    EXPECT_EQ(count_lines(slurp(path("norm_q" + std::to_string(k) + "_density.csv"))), 513u);
  }
  r = run({"decay", "--preset", "figure1", "--sizes", "100,300", "--reps", "5", "--out", path("decay")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_GT(count_lines(slurp(path("decay.csv"))), 1u);
}

TEST_F(Cli, HelpListsFlags) {
  const Result top = run({"--help"});
  EXPECT_EQ(top.code, 0);
  std::string all = top.out;
  for (const std::string sub : {"generate", "fit", "experiment", "normality", "decay"}) {
    const Result h = run({sub, "--help"});
    EXPECT_EQ(h.code, 0) << sub;
    all += h.out;
  }
  for (const std::string flag : {"--spec", "--n", "--seed", "--algorithm", "--c-gamma", "--alpha", "--init-k",
                                 "--init-n", "--avg-burn", "--fresh-init", "--bf-tol", "--bf-max-iter", "--reps",
                                 "--workers", "--out", "--format", "--rmse", "SPHEREFIT_SEED"}) {
    EXPECT_NE(all.find(flag), std::string::npos) << flag;
  }
}
