#include "spherefit/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "spherefit/error.hpp"
#include "spherefit/inference.hpp"
#include "spherefit/parallel.hpp"

namespace spherefit {

const char* to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::Rm: return "rm";
    case Algorithm::Prm: return "prm";
    case Algorithm::Averaged: return "averaged";
    case Algorithm::Backfit: return "backfit";
  }
  return "unknown";
}

Algorithm parse_algorithm(const std::string& name) {
  if (name == "rm") return Algorithm::Rm;
  if (name == "prm") return Algorithm::Prm;
  if (name == "averaged") return Algorithm::Averaged;
  if (name == "backfit") return Algorithm::Backfit;
  throw Error(ErrorKind::InvalidArgument, "unknown algorithm '" + name + "'");
}

std::string format_number(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.17g", value);
  return buffer;
}

namespace {

void validate_sizes(const std::vector<std::size_t>& sizes, const InitializerConfig& init) {
  if (sizes.empty()) throw Error(ErrorKind::InvalidArgument, "plan needs at least one sample size");
  for (std::size_t n : sizes) {
    if (n < init.k_first) {
      throw Error(ErrorKind::InvalidArgument,
                  "sample size " + std::to_string(n) + " is below the initializer's k_first");
    }
  }
}

bool same_schedule(const StepSchedule& a, const StepSchedule& b) {
  return a.c_gamma == b.c_gamma && a.alpha == b.alpha;
}

ReplicationRecord make_record(std::size_t replication, std::uint64_t seed, const SphereParams& estimate,
                              const SphereParams& truth, bool frozen) {
  ReplicationRecord record;
  record.replication = replication;
  record.seed = seed;
  record.center_error = estimate.center - truth.center;
  record.radius_error = estimate.radius - truth.radius;
  const double err = record.center_error.norm();
  record.diverged = frozen || !std::isfinite(err) || err > kDivergenceThreshold;
  return record;
}

ReplicationRecord failed_record(std::size_t replication, std::uint64_t seed, Eigen::Index dim,
                                const std::string& what) {
  ReplicationRecord record;
  record.replication = replication;
  record.seed = seed;
  record.center_error = Vector::Constant(dim, std::nan(""));
  record.radius_error = std::nan("");
  record.failed = true;
  record.error = what;
  return record;
}

struct CellKey {
  Algorithm algorithm;
  std::optional<StepSchedule> schedule;
};

std::vector<CellKey> cell_keys(const ExperimentPlan& plan) {
  std::vector<CellKey> keys;
  for (Algorithm a : plan.algorithms) {
    if (a == Algorithm::Backfit) {
      keys.push_back({a, std::nullopt});
    } else {
      for (const StepSchedule& s : plan.schedules) keys.push_back({a, s});
    }
  }
  return keys;
}

// One data set, every cell evaluated on it; records come back in `keys` order.
std::vector<ReplicationRecord> run_replication(const ExperimentPlan& plan, const std::vector<CellKey>& keys,
                                               const SphereParams& truth, std::size_t n,
                                               std::size_t replication) {
  const std::uint64_t seed = derive_seed(plan.master_seed, n, replication);
  const Eigen::Index dim = plan.spec.dim();
  std::vector<ReplicationRecord> records;
  records.reserve(keys.size());

  Matrix points;
  Initialization init;
  try {
    Rng rng = make_rng(seed);
    points = sample_observations(plan.spec, static_cast<Eigen::Index>(n), rng);
    init = initialize(points, plan.init, rng);
  } catch (const Error& e) {
    for (std::size_t i = 0; i < keys.size(); ++i) records.push_back(failed_record(replication, seed, dim, e.what()));
    return records;
  }

  // PRM runs are shared between the prm and averaged cells of a schedule.
  std::vector<std::optional<FitResult>> projected(plan.schedules.size());
  for (const CellKey& key : keys) {
    try {
      if (key.algorithm == Algorithm::Backfit) {
        const BackfitResult bf = backfit(points, init.estimate, plan.backfit);
        records.push_back(make_record(replication, seed, bf.estimate, truth, false));
        continue;
      }
      const auto it = std::find_if(plan.schedules.begin(), plan.schedules.end(),
                                   [&](const StepSchedule& s) { return same_schedule(s, *key.schedule); });
      const auto index = static_cast<std::size_t>(it - plan.schedules.begin());
      if (key.algorithm == Algorithm::Rm) {
        FitOptions options = plan.fit;
        options.project = false;
        const FitResult rm = fit(points, init, *key.schedule, options);
        records.push_back(make_record(replication, seed, rm.state.theta_hat, truth, rm.state.frozen));
        continue;
      }
      if (!projected[index]) {
        FitOptions options = plan.fit;
        options.project = true;
        projected[index] = fit(points, init, *key.schedule, options);
      }
      const EstimatorState& state = projected[index]->state;
      const SphereParams& estimate = key.algorithm == Algorithm::Prm ? state.theta_hat : state.theta_bar;
      records.push_back(make_record(replication, seed, estimate, truth, state.frozen));
    } catch (const Error& e) {
      records.push_back(failed_record(replication, seed, dim, e.what()));
    }
  }
  return records;
}

void aggregate(CellResult& cell, bool root_mean) {
  const Eigen::Index dim = cell.records.empty() ? 0 : cell.records.front().center_error.size();
  cell.component_mse = Vector::Zero(dim);
  std::size_t used = 0;
  for (const ReplicationRecord& r : cell.records) {
    if (r.failed) {
      ++cell.failed;
      continue;
    }
    if (r.diverged) ++cell.diverged;
    cell.center_mse += r.center_error.squaredNorm();
    cell.radius_mse += r.radius_error * r.radius_error;
    cell.component_mse += r.center_error.cwiseAbs2();
    ++used;
  }
  const double denom = static_cast<double>(used);
  cell.center_mse /= denom;
  cell.radius_mse /= denom;
  cell.component_mse /= denom;
  if (root_mean) {
    cell.center_mse = std::sqrt(cell.center_mse);
    cell.radius_mse = std::sqrt(cell.radius_mse);
    cell.component_mse = cell.component_mse.cwiseSqrt();
  }
  cell.partial = 20 * cell.failed > cell.records.size();
}

}  // namespace

void ExperimentPlan::validate() const {
  spec.validate();
  validate_sizes(sample_sizes, init);
  if (algorithms.empty()) throw Error(ErrorKind::InvalidArgument, "plan needs at least one algorithm");
  const bool needs_schedule = std::any_of(algorithms.begin(), algorithms.end(),
                                          [](Algorithm a) { return a != Algorithm::Backfit; });
  if (needs_schedule && schedules.empty()) {
    throw Error(ErrorKind::InvalidArgument, "plan needs at least one step schedule");
  }
  for (const StepSchedule& s : schedules) s.validate();
  if (replications < 2) throw Error(ErrorKind::InvalidArgument, "plan needs at least two replications");
  backfit.validate();
}

const CellResult& ExperimentReport::cell(Algorithm algorithm, std::size_t n,
                                         std::optional<StepSchedule> schedule) const {
  for (const CellResult& c : cells) {
    if (c.algorithm != algorithm || c.n != n) continue;
    if (schedule && (!c.schedule || !same_schedule(*c.schedule, *schedule))) continue;
    return c;
  }
  throw Error(ErrorKind::InvalidArgument, "no such cell in report");
}

ExperimentReport run_plan(const ExperimentPlan& plan) {
  plan.validate();
  const auto started = std::chrono::steady_clock::now();
  const SphereParams truth = identifiable_params(plan.spec);
  const std::vector<CellKey> keys = cell_keys(plan);

  const std::size_t sizes = plan.sample_sizes.size();
  const std::size_t reps = plan.replications;
  std::vector<std::vector<ReplicationRecord>> results(sizes * reps);
  parallel_for(sizes * reps, plan.workers, [&](std::size_t task) {
    const std::size_t n = plan.sample_sizes[task / reps];
    results[task] = run_replication(plan, keys, truth, n, task % reps);
  });

  ExperimentReport report;
  report.plan = plan;
  for (std::size_t s = 0; s < sizes; ++s) {
    for (std::size_t k = 0; k < keys.size(); ++k) {
      CellResult cell;
      cell.algorithm = keys[k].algorithm;
      cell.schedule = keys[k].schedule;
      cell.n = plan.sample_sizes[s];
      cell.records.reserve(reps);
      for (std::size_t r = 0; r < reps; ++r) cell.records.push_back(std::move(results[s * reps + r][k]));
      aggregate(cell, plan.root_mean);
      report.cells.push_back(std::move(cell));
    }
  }
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

void write_csv(std::ostream& out, const ExperimentReport& report) {
  const std::string metric = report.plan.root_mean ? "rmse" : "mse";
  const Eigen::Index dim = report.plan.spec.dim();
  out << "algorithm,c_gamma,alpha,n,center_" << metric << ",radius_" << metric;
  for (Eigen::Index i = 0; i < dim; ++i) out << ",center_" << i << '_' << metric;
  out << ",diverged,failed,replications,partial\n";
  for (const CellResult& c : report.cells) {
    out << to_string(c.algorithm) << ',';
    if (c.schedule) {
      out << format_number(c.schedule->c_gamma) << ',' << format_number(c.schedule->alpha);
    } else {
      out << ',';
    }
    out << ',' << c.n << ',' << format_number(c.center_mse) << ',' << format_number(c.radius_mse);
    for (Eigen::Index i = 0; i < dim; ++i) out << ',' << format_number(c.component_mse(i));
    out << ',' << c.diverged << ',' << c.failed << ',' << c.records.size() << ','
        << (c.partial ? "true" : "false") << '\n';
  }
}

nlohmann::json to_json(const ExperimentReport& report) {
  nlohmann::json cells = nlohmann::json::array();
  for (const CellResult& c : report.cells) {
    nlohmann::json records = nlohmann::json::array();
    for (const ReplicationRecord& r : c.records) {
      nlohmann::json rec{{"replication", r.replication},
                         {"seed", r.seed},
                         {"diverged", r.diverged},
                         {"failed", r.failed}};
      if (r.failed) {
        rec["error"] = r.error;
      } else {
        rec["center_error"] = std::vector<double>(r.center_error.data(),
                                                  r.center_error.data() + r.center_error.size());
        rec["radius_error"] = r.radius_error;
      }
      records.push_back(std::move(rec));
    }
    nlohmann::json cell{{"algorithm", to_string(c.algorithm)},
                        {"n", c.n},
                        {"center_error", c.center_mse},
                        {"radius_error", c.radius_mse},
                        {"component_error", std::vector<double>(c.component_mse.data(),
                                                                c.component_mse.data() + c.component_mse.size())},
                        {"diverged", c.diverged},
                        {"failed", c.failed},
                        {"partial", c.partial},
                        {"records", std::move(records)}};
    if (c.schedule) cell["schedule"] = {{"c_gamma", c.schedule->c_gamma}, {"alpha", c.schedule->alpha}};
    cells.push_back(std::move(cell));
  }
  const ExperimentPlan& p = report.plan;
  nlohmann::json schedules = nlohmann::json::array();
  for (const StepSchedule& s : p.schedules) schedules.push_back({{"c_gamma", s.c_gamma}, {"alpha", s.alpha}});
  nlohmann::json algorithms = nlohmann::json::array();
  for (Algorithm a : p.algorithms) algorithms.push_back(to_string(a));
  return nlohmann::json{
      {"spec", p.spec},
      {"sample_sizes", p.sample_sizes},
      {"schedules", schedules},
      {"algorithms", algorithms},
      {"replications", p.replications},
      {"master_seed", p.master_seed},
      {"seed_derivation", "splitmix64(splitmix64(splitmix64(master) ^ n) ^ replication * 0xd1b54a32d192ed03)"},
      {"init", {{"k_first", p.init.k_first}, {"n_quadruplets", p.init.n_quadruplets}}},
      {"fresh_init", p.fit.fresh_init},
      {"avg_burn", p.fit.avg_burn},
      {"backfit", {{"tolerance", p.backfit.tolerance}, {"max_iterations", p.backfit.max_iterations}}},
      {"metric", p.root_mean ? "rmse" : "mse"},
      {"divergence_threshold", kDivergenceThreshold},
      {"wall_seconds", report.wall_seconds},
      {"cells", cells},
  };
}

void DecayPlan::validate() const {
  spec.validate();
  validate_sizes(sample_sizes, init);
  schedule.validate();
  if (replications < 2) throw Error(ErrorKind::InvalidArgument, "plan needs at least two replications");
}

const DecayRow& DecayReport::row(const std::string& algorithm, std::size_t n,
                                 const std::string& quantity) const {
  for (const DecayRow& r : rows) {
    if (r.algorithm == algorithm && r.n == n && r.quantity == quantity) return r;
  }
  throw Error(ErrorKind::InvalidArgument, "no such row in decay report");
}

DecayReport decay_study(const DecayPlan& plan) {
  plan.validate();
  std::vector<std::size_t> sizes = plan.sample_sizes;
  std::sort(sizes.begin(), sizes.end());
  sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());
  const std::size_t max_n = sizes.back();
  const SphereParams truth = identifiable_params(plan.spec);
  const Eigen::Index dim = plan.spec.dim();

  // snapshots[rep][0] is the initial estimate, then (prm, averaged) per size.
  std::vector<std::vector<SphereParams>> snapshots(plan.replications);
  parallel_for(plan.replications, plan.workers, [&](std::size_t rep) {
    Rng rng = make_rng(derive_seed(plan.master_seed, max_n, rep));
    const Matrix points = sample_observations(plan.spec, static_cast<Eigen::Index>(max_n), rng);
    const Initialization init = initialize(points, plan.init, rng);
    EstimatorState state = EstimatorState::begin(init.estimate, plan.schedule,
                                                 plan.fit.project ? std::optional(init.region) : std::nullopt,
                                                 plan.fit.avg_burn);
    std::vector<SphereParams>& snap = snapshots[rep];
    snap.push_back(init.estimate);
    const std::size_t first = plan.fit.fresh_init ? plan.init.k_first : 0;
    std::size_t next = 0;
    for (std::size_t i = first; i < max_n; ++i) {
      prm_update(state, points.row(static_cast<Eigen::Index>(i)).transpose());
      while (next < sizes.size() && sizes[next] == i + 1) {
        snap.push_back(state.theta_hat);
        snap.push_back(state.theta_bar);
        ++next;
      }
    }
    while (next < sizes.size()) {  // checkpoints not reached when fresh_init consumes them
      snap.push_back(state.theta_hat);
      snap.push_back(state.theta_bar);
      ++next;
    }
  });

  DecayReport report;
  report.plan = plan;
  auto emit = [&](const std::string& algorithm, std::size_t n, std::size_t slot) {
    for (Eigen::Index i = 0; i <= dim + 1; ++i) {
      std::vector<double> values;
      double sq = 0.0;
      for (const auto& snap : snapshots) {
        const SphereParams& est = snap[slot];
        double value = 0.0;
        double err = 0.0;
        if (i < dim) {
          value = est.center(i);
          err = value - truth.center(i);
        } else if (i == dim) {
          value = est.radius;
          err = value - truth.radius;
        } else {
          value = (est.center - truth.center).norm();
          err = value;
        }
        values.push_back(value);
        sq += err * err;
      }
      const std::string quantity =
          i < dim ? "center_" + std::to_string(i) : (i == dim ? "radius" : "center_error");
      report.rows.push_back(DecayRow{algorithm, n, quantity, five_number(values),
                                     sq / static_cast<double>(snapshots.size())});
    }
  };
  emit("init", plan.init.k_first, 0);
  for (std::size_t s = 0; s < sizes.size(); ++s) {
    emit("prm", sizes[s], 1 + 2 * s);
    emit("averaged", sizes[s], 2 + 2 * s);
  }
  return report;
}

void write_csv(std::ostream& out, const DecayReport& report) {
  out << "algorithm,n,quantity,min,q1,median,q3,max,mse\n";
  for (const DecayRow& r : report.rows) {
    out << r.algorithm << ',' << r.n << ',' << r.quantity << ',' << format_number(r.summary.min) << ','
        << format_number(r.summary.q1) << ',' << format_number(r.summary.median) << ','
        << format_number(r.summary.q3) << ',' << format_number(r.summary.max) << ','
        << format_number(r.mse) << '\n';
  }
}

void NormalityPlan::validate() const {
  spec.validate();
  validate_sizes({n}, init);
  schedule.validate();
  if (replications < 20) throw Error(ErrorKind::InvalidArgument, "normality study needs 20+ replications");
  if (!(level > 0.0 && level < 1.0)) throw Error(ErrorKind::InvalidArgument, "level must lie in (0, 1)");
}

NormalityReport normality_study(const NormalityPlan& plan) {
  plan.validate();
  const SphereParams truth = identifiable_params(plan.spec);
  const Eigen::Index dim = plan.spec.dim();

  struct Outcome {
    std::optional<QStatistic> q;
    bool covered = false;
  };
  std::vector<Outcome> outcomes(plan.replications);
  parallel_for(plan.replications, plan.workers, [&](std::size_t rep) {
    try {
      Rng rng = make_rng(derive_seed(plan.master_seed, plan.n, rep));
      const Matrix points = sample_observations(plan.spec, static_cast<Eigen::Index>(plan.n), rng);
      const Initialization init = initialize(points, plan.init, rng);
      EstimatorState state = EstimatorState::begin(init.estimate, plan.schedule, init.region, plan.fit.avg_burn);
      CovarianceAccumulators acc = CovarianceAccumulators::identity(dim);
      const Eigen::Index first = plan.fit.fresh_init ? static_cast<Eigen::Index>(plan.init.k_first) : 0;
      for (Eigen::Index i = first; i < points.rows(); ++i) {
        const Vector x = points.row(i).transpose();
        update_accumulators(acc, x, state.theta_bar);
        prm_update(state, x);
      }
      outcomes[rep].q = q_statistic(acc, state.theta_bar, truth);
      outcomes[rep].covered = confidence_ball(acc, state.theta_bar, plan.level).contains(truth);
    } catch (const Error&) {
      outcomes[rep].q.reset();
    }
  });

  NormalityReport report;
  report.plan = plan;
  report.components.assign(static_cast<std::size_t>(dim + 1), {});
  std::size_t covered = 0;
  for (const Outcome& o : outcomes) {
    if (!o.q) {
      ++report.failed;
      continue;
    }
    for (Eigen::Index k = 0; k <= dim; ++k) report.components[static_cast<std::size_t>(k)].push_back(o.q->q(k));
    if (o.q->ill_conditioned) ++report.ill_conditioned;
    if (o.covered) ++covered;
  }
  const std::size_t ok = plan.replications - report.failed;
  report.coverage = ok > 0 ? static_cast<double>(covered) / static_cast<double>(ok) : 0.0;
  summarize_components(report);
  return report;
}

void summarize_components(NormalityReport& report) {
  report.ks.clear();
  report.densities.clear();
  for (const auto& values : report.components) {
    report.ks.push_back(ks_normal_test(values));
    report.densities.push_back(kernel_density(values, report.plan.grid_points));
  }
}

void write_csv(std::ostream& out, const NormalityReport& report) {
  out << "component,ks_statistic,p_value,mean,sd,replications\n";
  for (std::size_t k = 0; k < report.components.size(); ++k) {
    const auto& values = report.components[k];
    const double m = static_cast<double>(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= m;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    out << "q" << k << ',' << format_number(report.ks[k].statistic) << ','
        << format_number(report.ks[k].p_value) << ',' << format_number(mean) << ','
        << format_number(std::sqrt(ss / (m - 1.0))) << ',' << values.size() << '\n';
  }
}

void write_density_csv(std::ostream& out, const DensityGrid& grid) {
  out << "x,density\n";
  for (std::size_t i = 0; i < grid.x.size(); ++i) {
    out << format_number(grid.x[i]) << ',' << format_number(grid.density[i]) << '\n';
  }
}

nlohmann::json to_json(const NormalityReport& report) {
  nlohmann::json comps = nlohmann::json::array();
  for (std::size_t k = 0; k < report.components.size(); ++k) {
    comps.push_back({{"component", k},
                     {"ks_statistic", report.ks[k].statistic},
                     {"p_value", report.ks[k].p_value},
                     {"bandwidth", report.densities[k].bandwidth},
                     {"values", report.components[k]}});
  }
  const NormalityPlan& p = report.plan;
  return nlohmann::json{{"spec", p.spec},
                        {"n", p.n},
                        {"schedule", {{"c_gamma", p.schedule.c_gamma}, {"alpha", p.schedule.alpha}}},
                        {"replications", p.replications},
                        {"master_seed", p.master_seed},
                        {"level", p.level},
                        {"coverage", report.coverage},
                        {"ill_conditioned", report.ill_conditioned},
                        {"failed", report.failed},
                        {"components", comps}};
}

DistributionSpec whole_sphere_spec() {
  return DistributionSpec{SphereParams{Vector::Zero(3), 50.0}, ShellLaw{0.1}, CompleteRegion{}};
}

DistributionSpec half_sphere_spec() {
  return DistributionSpec{SphereParams{Vector::Zero(3), 50.0}, RadialGaussianLaw{1.0}, HalfSpaceRegion{1, 1}};
}

std::vector<StepSchedule> table_schedules() {
  std::vector<StepSchedule> out;
  for (double c : {1.0, 5.0, 10.0}) {
    for (double a : {0.51, 0.6, 0.66, 0.75, 0.99}) out.push_back(StepSchedule{c, a});
  }
  return out;
}

StepSchedule default_schedule() { return StepSchedule{1.0, 2.0 / 3.0}; }

namespace {

ExperimentPlan table_plan(std::uint64_t seed, Algorithm algorithm) {
  ExperimentPlan plan;
  plan.spec = whole_sphere_spec();
  plan.sample_sizes = {2000};
  plan.schedules = table_schedules();
  plan.replications = 200;
  plan.algorithms = {algorithm};
  plan.master_seed = seed;
  return plan;
}

DecayPlan whole_sphere_decay(std::uint64_t seed, std::vector<std::size_t> sizes) {
  DecayPlan plan;
  plan.spec = whole_sphere_spec();
  plan.sample_sizes = std::move(sizes);
  plan.schedule = default_schedule();
  plan.replications = 200;
  plan.master_seed = seed;
  return plan;
}

}  // namespace

ExperimentPlan table1_plan(std::uint64_t seed) { return table_plan(seed, Algorithm::Rm); }

ExperimentPlan table2_plan(std::uint64_t seed) { return table_plan(seed, Algorithm::Prm); }

DecayPlan figure1_plan(std::uint64_t seed) { return whole_sphere_decay(seed, {100, 500, 1000, 2000, 5000}); }

DecayPlan figure2_plan(std::uint64_t seed) {
  return whole_sphere_decay(seed, {100, 250, 500, 1000, 2000, 5000});
}

NormalityPlan figure3_plan(std::uint64_t seed) {
  NormalityPlan plan;
  plan.spec = whole_sphere_spec();
  plan.n = 2000;
  plan.schedule = default_schedule();
  plan.replications = 200;
  plan.master_seed = seed;
  return plan;
}

ExperimentPlan figure4_plan(std::uint64_t seed) {
  ExperimentPlan plan;
  plan.spec = half_sphere_spec();
  plan.sample_sizes = {500, 1000, 2000, 5000};
  plan.schedules = {default_schedule()};
  plan.replications = 200;
  plan.algorithms = {Algorithm::Averaged, Algorithm::Backfit};
  plan.master_seed = seed;
  return plan;
}

}  // namespace spherefit
