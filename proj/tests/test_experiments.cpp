#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "spherefit/error.hpp"
#include "spherefit/experiments.hpp"

using namespace spherefit;

namespace {

ExperimentPlan small_plan() {
  ExperimentPlan plan;
  plan.spec = whole_sphere_spec();
  plan.sample_sizes = {300, 600};
  plan.schedules = {{1.0, 2.0 / 3.0}, {5.0, 0.75}};
  plan.replications = 6;
  plan.algorithms = {Algorithm::Prm, Algorithm::Averaged, Algorithm::Rm, Algorithm::Backfit};
  plan.master_seed = 99;
  plan.workers = 2;
  return plan;
}

std::string csv_of(const ExperimentReport& report) {
  std::ostringstream out;
  write_csv(out, report);
  return out.str();
}

std::size_t lines(const std::string& text) { return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')); }

}  // namespace

TEST(Plan, Validation) {
  EXPECT_NO_THROW(small_plan().validate());
  ExperimentPlan p = small_plan();
  p.sample_sizes.clear();
  EXPECT_THROW(p.validate(), Error);
  p = small_plan();
  p.algorithms.clear();
  EXPECT_THROW(p.validate(), Error);
  p = small_plan();
  p.replications = 1;
  EXPECT_THROW(p.validate(), Error);
  p = small_plan();
  p.sample_sizes = {10};
  EXPECT_THROW(p.validate(), Error);
  p = small_plan();
  p.schedules = {{1.0, 1.2}};
  EXPECT_THROW(p.validate(), Error);
}

TEST(Algorithms, NamesRoundTrip) {
  for (Algorithm a : {Algorithm::Rm, Algorithm::Prm, Algorithm::Averaged, Algorithm::Backfit}) {
    EXPECT_EQ(parse_algorithm(to_string(a)), a);
  }
  EXPECT_THROW(parse_algorithm("sgd"), Error);
}

TEST(RunPlan, CellsAndAggregates) {
  const ExperimentReport report = run_plan(small_plan());
  // Three schedule-based algorithms x two schedules + backfitting, for each size.
  ASSERT_EQ(report.cells.size(), 2u * (3u * 2u + 1u));
  for (const CellResult& c : report.cells) {
    ASSERT_EQ(c.records.size(), 6u);
    EXPECT_GE(c.center_mse, 0.0);
    EXPECT_GE(c.radius_mse, 0.0);
    EXPECT_EQ(c.schedule.has_value(), c.algorithm != Algorithm::Backfit);
    double center = 0.0;
    for (const ReplicationRecord& r : c.records) {
      ASSERT_FALSE(r.failed);
      center += r.center_error.squaredNorm();
      EXPECT_TRUE(r.center_error.allFinite() || r.diverged);
    }
    EXPECT_NEAR(c.center_mse, center / 6.0, 1e-12 * (1.0 + c.center_mse));
    EXPECT_NEAR(c.component_mse.sum(), c.center_mse, 1e-9 * (1.0 + c.center_mse));
  }
}

TEST(RunPlan, SharedDataAcrossAlgorithms) {
  const ExperimentReport report = run_plan(small_plan());
  const CellResult& prm = report.cell(Algorithm::Prm, 300, StepSchedule{1.0, 2.0 / 3.0});
  const CellResult& bf = report.cell(Algorithm::Backfit, 300);
  for (std::size_t r = 0; r < 6; ++r) EXPECT_EQ(prm.records[r].seed, bf.records[r].seed);
  EXPECT_NE(prm.records[0].seed, prm.records[1].seed);
  EXPECT_THROW(report.cell(Algorithm::Prm, 301), Error);
}

TEST(RunPlan, DeterministicAndOrderIndependent) {
  ExperimentPlan plan = small_plan();
  const std::string a = csv_of(run_plan(plan));
  const std::string b = csv_of(run_plan(plan));
  plan.workers = 1;
  const std::string c = csv_of(run_plan(plan));
  plan.workers = 5;
  const std::string d = csv_of(run_plan(plan));
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, c);
  EXPECT_EQ(a, d);
  plan.master_seed = 100;
  EXPECT_NE(a, csv_of(run_plan(plan)));
}

TEST(RunPlan, CsvLayout) {
  ExperimentPlan plan = small_plan();
  const std::string csv = csv_of(run_plan(plan));
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "algorithm,c_gamma,alpha,n,center_mse,radius_mse,center_0_mse,center_1_mse,center_2_mse,"
            "diverged,failed,replications,partial");
  EXPECT_EQ(lines(csv), 1u + 14u);
  EXPECT_NE(csv.find("\nbackfit,,,300,"), std::string::npos);
  plan.root_mean = true;
  const std::string rmse = csv_of(run_plan(plan));
  EXPECT_EQ(rmse.rfind("algorithm,c_gamma,alpha,n,center_rmse,radius_rmse", 0), 0u);
}

TEST(RunPlan, RootMeanIsSquareRoot) {
  ExperimentPlan plan = small_plan();
  const ExperimentReport mse = run_plan(plan);
  plan.root_mean = true;
  const ExperimentReport rmse = run_plan(plan);
  for (std::size_t i = 0; i < mse.cells.size(); ++i) {
    EXPECT_NEAR(rmse.cells[i].center_mse, std::sqrt(mse.cells[i].center_mse), 1e-12 * (1.0 + rmse.cells[i].center_mse));
  }
}

TEST(RunPlan, JsonCarriesSeeds) {
  const ExperimentReport report = run_plan(small_plan());
  const nlohmann::json j = to_json(report);
  EXPECT_EQ(j["master_seed"], 99u);
  EXPECT_EQ(j["cells"].size(), report.cells.size());
  EXPECT_EQ(j["cells"][0]["records"].size(), 6u);
  EXPECT_EQ(j["cells"][0]["records"][3]["seed"], report.cells[0].records[3].seed);
  EXPECT_EQ(j["spec"]["radius"], 50.0);
}

TEST(Presets, Grids) {
  EXPECT_EQ(table_schedules().size(), 15u);
  const ExperimentPlan t1 = table1_plan(1);
  const ExperimentPlan t2 = table2_plan(1);
  EXPECT_EQ(t1.algorithms, std::vector<Algorithm>{Algorithm::Rm});
  EXPECT_EQ(t2.algorithms, std::vector<Algorithm>{Algorithm::Prm});
  EXPECT_EQ(t2.sample_sizes, std::vector<std::size_t>{2000});
  EXPECT_EQ(t2.replications, 200u);
  EXPECT_EQ(default_schedule().c_gamma, 1.0);
  EXPECT_NEAR(default_schedule().alpha, 2.0 / 3.0, 1e-15);
  EXPECT_TRUE(std::holds_alternative<HalfSpaceRegion>(figure4_plan(1).spec.region));
  EXPECT_TRUE(std::holds_alternative<RadialGaussianLaw>(half_sphere_spec().radial));
}

TEST(Presets, Table2ShapeWithTwoReplications) {
  ExperimentPlan plan = table2_plan(5);
  plan.replications = 2;
  const ExperimentReport report = run_plan(plan);
  EXPECT_EQ(report.cells.size(), 15u);
  EXPECT_EQ(lines(csv_of(report)), 16u);
  EXPECT_EQ(csv_of(report), csv_of(run_plan(plan)));
}

TEST(Decay, MediansDecreaseAndComponentsBalance) {
  DecayPlan plan = figure2_plan(3);
  plan.sample_sizes = {100, 500, 2000, 5000};
  const DecayReport report = decay_study(plan);
  for (const std::string alg : {"prm", "averaged"}) {
    double prev = 1e300;
    for (std::size_t n : plan.sample_sizes) {
      const double med = report.row(alg, n, "center_error").summary.median;
      EXPECT_LT(med, prev) << alg << " n=" << n;
      prev = med;
    }
    std::vector<double> comp;
    for (int i = 0; i < 3; ++i) comp.push_back(report.row(alg, 2000, "center_" + std::to_string(i)).mse);
    EXPECT_LE(*std::max_element(comp.begin(), comp.end()), 1.5 * *std::min_element(comp.begin(), comp.end())) << alg;
  }
  EXPECT_NO_THROW(report.row("init", plan.init.k_first, "center_error"));
  std::ostringstream out;
  write_csv(out, report);
  EXPECT_EQ(out.str().rfind("algorithm,n,quantity,min,q1,median,q3,max,mse\n", 0), 0u);
}

TEST(Normality, SmallStudy) {
  NormalityPlan plan = figure3_plan(4);
  plan.n = 500;
  plan.replications = 40;
  const NormalityReport report = normality_study(plan);
  ASSERT_EQ(report.components.size(), 4u);
  ASSERT_EQ(report.ks.size(), 4u);
  ASSERT_EQ(report.densities.size(), 4u);
  for (const auto& c : report.components) EXPECT_EQ(c.size(), 40u);
  EXPECT_GE(report.coverage, 0.0);
  EXPECT_LE(report.coverage, 1.0);
  for (const DensityGrid& g : report.densities) {
    double area = 0.0;
    for (std::size_t i = 1; i < g.x.size(); ++i) area += 0.5 * (g.x[i] - g.x[i - 1]) * (g.density[i] + g.density[i - 1]);
    EXPECT_NEAR(area, 1.0, 0.01);
  }
  std::ostringstream out;
  write_csv(out, report);
  EXPECT_EQ(out.str().rfind("component,ks_statistic,p_value,mean,sd,replications\n", 0), 0u);
  EXPECT_EQ(lines(out.str()), 5u);
  EXPECT_EQ(to_json(report)["components"].size(), 4u);
}

TEST(Normality, ConstantComponentsAreRejected) {
  NormalityReport report;
  report.plan.grid_points = 64;
  report.components.assign(4, std::vector<double>(200, 0.7));
  summarize_components(report);
  for (const KsResult& ks : report.ks) EXPECT_LT(ks.p_value, 1e-6);
}

TEST(Format, SeventeenDigits) {
  EXPECT_EQ(format_number(0.1), "0.10000000000000001");
  EXPECT_EQ(std::stod(format_number(1.0 / 3.0)), 1.0 / 3.0);
}
