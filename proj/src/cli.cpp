#include "spherefit/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "spherefit/baseline.hpp"
#include "spherefit/error.hpp"
#include "spherefit/experiments.hpp"
#include "spherefit/geometry.hpp"
#include "spherefit/inference.hpp"
#include "spherefit/model.hpp"
#include "spherefit/prm.hpp"

namespace spherefit::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr std::uint64_t kDefaultSeed = 1;

struct CommonOptions {
  std::string spec_path;
  std::string spec_preset = "whole";
  std::optional<std::uint64_t> seed;
  std::size_t workers = 0;
  std::size_t init_k = 50;
  std::size_t init_n = 200;
  std::size_t avg_burn = 0;
  bool fresh_init = false;
  double c_gamma = 1.0;
  double alpha = 2.0 / 3.0;
  double bf_tol = 1e-8;
  int bf_max_iter = 500;
  std::string out;
};

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("SPHEREFIT_SEED"); env != nullptr && *env != '\0') {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw Error(ErrorKind::InvalidArgument, std::string("SPHEREFIT_SEED is not an integer: ") + env);
    }
  }
  return kDefaultSeed;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  if (buffer.str().find_first_not_of(" \t\r\n") == std::string::npos) {
    throw Error(ErrorKind::Parse, "'" + path + "' is empty");
  }
  try {
    return json::parse(buffer.str());
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, "'" + path + "': " + e.what());
  }
}

DistributionSpec resolve_spec(const CommonOptions& opts) {
  if (!opts.spec_path.empty()) return read_json_file(opts.spec_path).get<DistributionSpec>();
  if (opts.spec_preset == "whole") return whole_sphere_spec();
  if (opts.spec_preset == "half") return half_sphere_spec();
  throw Error(ErrorKind::InvalidArgument, "unknown --spec-preset '" + opts.spec_preset + "'");
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write '" + path.string() + "'");
  return out;
}

void add_spec_options(CLI::App& cmd, CommonOptions& o) {
  cmd.add_option("--spec", o.spec_path, "Distribution spec JSON file")->check(CLI::ExistingFile);
  cmd.add_option("--spec-preset", o.spec_preset,
                 "Built-in spec when --spec is absent: whole (shell 0.1, complete) or half "
                 "(radial gaussian 1, half-sphere y >= 0)")
      ->check(CLI::IsMember({"whole", "half"}));
}

void add_seed_option(CLI::App& cmd, CommonOptions& o) {
  cmd.add_option("--seed", o.seed, "Master seed (falls back to $SPHEREFIT_SEED, then 1)");
}

void add_fit_options(CLI::App& cmd, CommonOptions& o) {
  cmd.add_option("--c-gamma", o.c_gamma, "Step constant c_gamma in gamma_n = c_gamma n^-alpha")
      ->capture_default_str();
  cmd.add_option("--alpha", o.alpha, "Step exponent alpha in (1/2, 1)")->capture_default_str();
  cmd.add_option("--init-k", o.init_k, "Initializer: number of leading points used")->capture_default_str();
  cmd.add_option("--init-n", o.init_n, "Initializer: number of (d+1)-tuples drawn")->capture_default_str();
  cmd.add_option("--avg-burn", o.avg_burn, "Leave the first B iterates out of the average")
      ->capture_default_str();
  cmd.add_flag("--fresh-init", o.fresh_init, "Hold the initializer's points out of the recursion");
  cmd.add_option("--bf-tol", o.bf_tol, "Backfitting relative tolerance")->capture_default_str();
  cmd.add_option("--bf-max-iter", o.bf_max_iter, "Backfitting iteration cap")->capture_default_str();
}

StepSchedule schedule_of(const CommonOptions& o) {
  StepSchedule s{o.c_gamma, o.alpha};
  s.validate();
  return s;
}

InitializerConfig init_of(const CommonOptions& o) { return InitializerConfig{o.init_k, o.init_n}; }

FitOptions fit_options_of(const CommonOptions& o) {
  FitOptions f;
  f.fresh_init = o.fresh_init;
  f.k_first = o.init_k;
  f.avg_burn = o.avg_burn;
  return f;
}

BackfitConfig backfit_of(const CommonOptions& o) {
  BackfitConfig b;
  b.tolerance = o.bf_tol;
  b.max_iterations = o.bf_max_iter;
  return b;
}

int cmd_generate(const CommonOptions& o, std::size_t n, const std::string& format, std::ostream& out) {
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "--n must be at least 1");
  if (o.out.empty()) throw Error(ErrorKind::InvalidArgument, "generate needs --out");
  const DistributionSpec spec = resolve_spec(o);
  const std::uint64_t seed = resolve_seed(o.seed);
  Rng rng = make_rng(seed);
  const Matrix points = sample_observations(spec, static_cast<Eigen::Index>(n), rng);

  const char* separator = format == "csv" ? "," : " ";
  std::ofstream file = open_output(o.out);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    for (Eigen::Index j = 0; j < points.cols(); ++j) {
      if (j > 0) file << separator;
      file << format_number(points(i, j));
    }
    file << '\n';
  }
  std::ofstream sidecar = open_output(o.out + ".json");
  sidecar << json{{"spec", spec}, {"seed", seed}, {"n", n}, {"format", format}}.dump(2) << '\n';
  out << "wrote " << n << " points to " << o.out << '\n';
  return 0;
}

int cmd_fit(const CommonOptions& o, const std::string& input, const std::string& algorithm_name,
            std::optional<double> confidence, std::ostream& out) {
  const Algorithm algorithm = parse_algorithm(algorithm_name);
  const Matrix points = read_points_file(input);
  Rng rng = make_rng(resolve_seed(o.seed));
  const Initialization init = initialize(points, init_of(o), rng);

  json result;
  bool diverged = false;
  if (algorithm == Algorithm::Backfit) {
    const BackfitResult bf = backfit(points, init.estimate, backfit_of(o));
    FitSummary summary{static_cast<std::size_t>(points.rows()), bf.estimate, bf.estimate, 0, 0,
                       !bf.estimate.is_valid()};
    result = summary;
    result["iterations"] = bf.iterations;
    result["converged"] = bf.converged;
    diverged = summary.diverged;
  } else {
    FitOptions options = fit_options_of(o);
    options.project = algorithm != Algorithm::Rm;
    const StepSchedule schedule = schedule_of(o);
    if (confidence) {
      // Replays the recursion with the covariance accumulators alongside.
      std::optional<CompactRegion> region;
      if (options.project) region = init.region;
      EstimatorState state = EstimatorState::begin(init.estimate, schedule, region, options.avg_burn);
      CovarianceAccumulators acc = CovarianceAccumulators::identity(points.cols());
      const Eigen::Index first = options.fresh_init ? static_cast<Eigen::Index>(options.k_first) : 0;
      for (Eigen::Index i = first; i < points.rows(); ++i) {
        const Vector x = points.row(i).transpose();
        update_accumulators(acc, x, state.theta_bar);
        prm_update(state, x);
      }
      const FitSummary summary = summarize(state);
      result = summary;
      result["confidence"] = confidence_ball(acc, state.theta_bar, *confidence);
      diverged = summary.diverged;
    } else {
      const FitResult fitted = fit(points, init, schedule, options);
      result = fitted.summary;
      diverged = fitted.summary.diverged;
    }
  }
  result["algorithm"] = to_string(algorithm);
  result["init"] = init.estimate;
  out << result.dump(2) << '\n';
  return diverged ? 2 : 0;
}

ExperimentPlan plan_from_json(const json& j) {
  ExperimentPlan plan;
  try {
    plan.spec = j.at("spec").get<DistributionSpec>();
    plan.sample_sizes = j.at("sample_sizes").get<std::vector<std::size_t>>();
    for (const auto& s : j.value("schedules", json::array())) {
      plan.schedules.push_back(StepSchedule{s.at("c_gamma").get<double>(), s.at("alpha").get<double>()});
    }
    plan.replications = j.value("replications", std::size_t{200});
    for (const auto& a : j.at("algorithms")) plan.algorithms.push_back(parse_algorithm(a.get<std::string>()));
    plan.master_seed = j.value("master_seed", kDefaultSeed);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("experiment plan: ") + e.what());
  }
  return plan;
}

void write_experiment(const ExperimentReport& report, const std::string& prefix, std::ostream& out,
                      std::ostream& err) {
  {
    std::ofstream csv = open_output(prefix + ".csv");
    write_csv(csv, report);
  }
  {
    std::ofstream js = open_output(prefix + ".json");
    js << to_json(report).dump(2) << '\n';
  }
  for (const CellResult& c : report.cells) {
    if (c.partial) {
      err << "warning: cell " << to_string(c.algorithm) << " n=" << c.n << " is partial (" << c.failed
          << " failed replications)\n";
    }
  }
  out << "wrote " << prefix << ".csv and " << prefix << ".json (" << report.cells.size() << " cells)\n";
}

}  // namespace

Matrix read_points(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    for (char& c : line) {
      if (c == ',' || c == ';' || c == '\t' || c == '\r') c = ' ';
    }
    std::istringstream fields(line);
    std::vector<double> row;
    std::string token;
    while (fields >> token) {
      std::size_t used = 0;
      double value = 0.0;
      try {
        value = std::stod(token, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != token.size()) {
        throw Error(ErrorKind::Parse,
                    "line " + std::to_string(line_number) + ": '" + token + "' is not a number");
      }
      row.push_back(value);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw Error(ErrorKind::Parse, "line " + std::to_string(line_number) + ": expected " +
                                        std::to_string(rows.front().size()) + " coordinates, got " +
                                        std::to_string(row.size()));
    }
    if (row.size() < 2) {
      throw Error(ErrorKind::Parse, "line " + std::to_string(line_number) + ": need at least 2 coordinates");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(ErrorKind::Parse, "no points in input");
  Matrix points(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return points;
}

Matrix read_points_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path + "'");
  return read_points(in);
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Streaming sphere fitting: projected Robbins-Monro with averaging", "spherefit"};
  app.require_subcommand(1);

  CommonOptions opts;

  auto* generate = app.add_subcommand("generate", "Sample a point cloud from a distribution spec");
  std::size_t gen_n = 2000;
  std::string format = "csv";
  add_spec_options(*generate, opts);
  add_seed_option(*generate, opts);
  generate->add_option("--n", gen_n, "Number of points")->capture_default_str();
  generate->add_option("--out", opts.out, "Output file (a .json sidecar is written next to it)");
  generate->add_option("--format", format, "csv (comma separated) or xyz (space separated)")
      ->check(CLI::IsMember({"csv", "xyz"}))
      ->capture_default_str();

  auto* fit_cmd = app.add_subcommand("fit", "Fit a sphere to a point file; prints a JSON summary");
  std::string input;
  std::string algorithm = "averaged";
  std::optional<double> confidence;
  fit_cmd->add_option("input", input, "Point file (csv or xyz)")->required();
  fit_cmd->add_option("--algorithm", algorithm, "rm, prm, averaged or backfit")
      ->check(CLI::IsMember({"rm", "prm", "averaged", "backfit"}))
      ->capture_default_str();
  fit_cmd->add_option("--confidence", confidence, "Also report the confidence ellipsoid at this level");
  add_seed_option(*fit_cmd, opts);
  add_fit_options(*fit_cmd, opts);

  auto* experiment = app.add_subcommand("experiment", "Run a Monte Carlo plan; writes <out>.csv and <out>.json");
  std::string preset;
  std::string plan_path;
  std::optional<std::size_t> reps;
  bool rmse = false;
  experiment->add_option("--preset", preset, "table1, table2 or figure4")
      ->check(CLI::IsMember({"table1", "table2", "figure4"}));
  experiment->add_option("--plan", plan_path, "Plan JSON file");
  experiment->add_option("--reps", reps, "Override the number of replications");
  experiment->add_option("--workers", opts.workers, "Worker threads (0 = all cores)");
  experiment->add_option("--out", opts.out, "Output prefix")->required();
  experiment->add_flag("--rmse", rmse, "Report root mean squared errors");
  add_seed_option(*experiment, opts);
  add_fit_options(*experiment, opts);

  auto* normality = app.add_subcommand("normality", "Normality study of Q_n; writes CSV, JSON and density grids");
  std::size_t norm_n = 2000;
  double level = 0.95;
  normality->add_option("--preset", preset, "figure3")->check(CLI::IsMember({"figure3"}));
  add_spec_options(*normality, opts);
  normality->add_option("--n", norm_n, "Sample size")->capture_default_str();
  normality->add_option("--reps", reps, "Replications");
  normality->add_option("--level", level, "Confidence level for the coverage check")->capture_default_str();
  normality->add_option("--workers", opts.workers, "Worker threads (0 = all cores)");
  normality->add_option("--out", opts.out, "Output prefix")->required();
  add_seed_option(*normality, opts);
  add_fit_options(*normality, opts);

  auto* decay = app.add_subcommand("decay", "Error decay with the sample size; writes <out>.csv");
  std::vector<std::size_t> sizes;
  decay->add_option("--preset", preset, "figure1 or figure2")->check(CLI::IsMember({"figure1", "figure2"}));
  add_spec_options(*decay, opts);
  decay->add_option("--sizes", sizes, "Sample sizes")->delimiter(',');
  decay->add_option("--reps", reps, "Replications");
  decay->add_option("--workers", opts.workers, "Worker threads (0 = all cores)");
  decay->add_option("--out", opts.out, "Output prefix")->required();
  add_seed_option(*decay, opts);
  add_fit_options(*decay, opts);

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 1;
  }

  try {
    if (generate->parsed()) return cmd_generate(opts, gen_n, format, out);
    if (fit_cmd->parsed()) return cmd_fit(opts, input, algorithm, confidence, out);

    const std::uint64_t seed = resolve_seed(opts.seed);
    if (experiment->parsed()) {
      ExperimentPlan plan;
      if (!plan_path.empty()) {
        try {
          plan = plan_from_json(read_json_file(plan_path));
        } catch (const Error& e) {
          err << "error: " << e.what() << "\n\n" << experiment->help();
          return 1;
        }
        if (opts.seed || std::getenv("SPHEREFIT_SEED") != nullptr) plan.master_seed = seed;
      } else if (preset == "table1") {
        plan = table1_plan(seed);
      } else if (preset == "table2") {
        plan = table2_plan(seed);
      } else if (preset == "figure4") {
        plan = figure4_plan(seed);
      } else {
        err << "error: experiment needs --preset or --plan\n\n" << experiment->help();
        return 1;
      }
      if (reps) plan.replications = *reps;
      plan.workers = opts.workers;
      plan.root_mean = rmse;
      plan.init = init_of(opts);
      plan.fit = fit_options_of(opts);
      plan.backfit = backfit_of(opts);
      if (plan_path.empty() && (experiment->count("--c-gamma") > 0 || experiment->count("--alpha") > 0)) {
        plan.schedules = {schedule_of(opts)};
      }
      write_experiment(run_plan(plan), opts.out, out, err);
      return 0;
    }

    if (normality->parsed()) {
      NormalityPlan plan = figure3_plan(seed);
      if (preset.empty()) {
        plan.spec = resolve_spec(opts);
        plan.n = norm_n;
      }
      plan.schedule = schedule_of(opts);
      if (reps) plan.replications = *reps;
      plan.level = level;
      plan.workers = opts.workers;
      plan.init = init_of(opts);
      plan.fit = fit_options_of(opts);
      const NormalityReport report = normality_study(plan);
      {
        std::ofstream csv = open_output(opts.out + ".csv");
        write_csv(csv, report);
      }
      {
        std::ofstream js = open_output(opts.out + ".json");
        js << to_json(report).dump(2) << '\n';
      }
      for (std::size_t k = 0; k < report.densities.size(); ++k) {
        std::ofstream grid = open_output(opts.out + "_q" + std::to_string(k) + "_density.csv");
        write_density_csv(grid, report.densities[k]);
      }
      out << "coverage " << format_number(report.coverage) << " at level " << format_number(level) << '\n';
      for (std::size_t k = 0; k < report.ks.size(); ++k) {
        out << "q" << k << " ks=" << format_number(report.ks[k].statistic)
            << " p=" << format_number(report.ks[k].p_value) << '\n';
      }
      return 0;
    }

    if (decay->parsed()) {
      DecayPlan plan = preset == "figure1" ? figure1_plan(seed) : figure2_plan(seed);
      if (preset.empty()) plan.spec = resolve_spec(opts);
      if (!sizes.empty()) plan.sample_sizes = sizes;
      plan.schedule = schedule_of(opts);
      if (reps) plan.replications = *reps;
      plan.workers = opts.workers;
      plan.init = init_of(opts);
      plan.fit = fit_options_of(opts);
      const DecayReport report = decay_study(plan);
      std::ofstream csv = open_output(opts.out + ".csv");
      write_csv(csv, report);
      out << "wrote " << opts.out << ".csv (" << report.rows.size() << " rows)\n";
      return 0;
    }
  } catch (const Error& e) {
    err << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace spherefit::cli
