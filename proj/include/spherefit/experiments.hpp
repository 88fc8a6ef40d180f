#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "spherefit/baseline.hpp"
#include "spherefit/geometry.hpp"
#include "spherefit/model.hpp"
#include "spherefit/prm.hpp"
#include "spherefit/stats.hpp"

namespace spherefit {

enum class Algorithm { Rm, Prm, Averaged, Backfit };

const char* to_string(Algorithm algorithm);
Algorithm parse_algorithm(const std::string& name);

/// A center error beyond this marks a replication diverged.
inline constexpr double kDivergenceThreshold = 1e6;

struct ExperimentPlan {
  DistributionSpec spec;
  std::vector<std::size_t> sample_sizes;
  std::vector<StepSchedule> schedules;
  std::size_t replications = 200;
  std::vector<Algorithm> algorithms;
  std::uint64_t master_seed = 0;
  InitializerConfig init;
  FitOptions fit;
  BackfitConfig backfit;
  /// Report root mean squared errors instead of mean squared errors.
  bool root_mean = false;
  /// 0 means one worker per hardware thread.
  std::size_t workers = 0;

  void validate() const;
};

struct ReplicationRecord {
  std::size_t replication = 0;
  std::uint64_t seed = 0;
  Vector center_error;
  double radius_error = 0.0;
  bool diverged = false;
  bool failed = false;
  std::string error;
};

struct CellResult {
  Algorithm algorithm = Algorithm::Prm;
  /// Absent for the backfitting baseline, which has no step schedule.
  std::optional<StepSchedule> schedule;
  std::size_t n = 0;
  double center_mse = 0.0;
  double radius_mse = 0.0;
  Vector component_mse;
  std::size_t diverged = 0;
  std::size_t failed = 0;
  bool partial = false;
  std::vector<ReplicationRecord> records;
};

struct ExperimentReport {
  ExperimentPlan plan;
  std::vector<CellResult> cells;
  double wall_seconds = 0.0;

  /// First cell matching the algorithm, sample size and (when given) schedule.
  const CellResult& cell(Algorithm algorithm, std::size_t n,
                         std::optional<StepSchedule> schedule = std::nullopt) const;
};

/// Runs every (algorithm, schedule, n) cell over independent seeded replications.
/// All algorithms at a given sample size see the same data sets.
ExperimentReport run_plan(const ExperimentPlan& plan);

void write_csv(std::ostream& out, const ExperimentReport& report);
nlohmann::json to_json(const ExperimentReport& report);

struct DecayPlan {
  DistributionSpec spec;
  std::vector<std::size_t> sample_sizes;
  StepSchedule schedule;
  std::size_t replications = 200;
  std::uint64_t master_seed = 0;
  InitializerConfig init;
  FitOptions fit;
  std::size_t workers = 0;

  void validate() const;
};

struct DecayRow {
  std::string algorithm;  // "init", "prm" or "averaged"
  std::size_t n = 0;
  /// "center_<i>", "radius" or "center_error" (Euclidean center error).
  std::string quantity;
  FiveNumber summary;
  /// Mean squared error of the quantity against its true value.
  double mse = 0.0;
};

struct DecayReport {
  DecayPlan plan;
  std::vector<DecayRow> rows;

  const DecayRow& row(const std::string& algorithm, std::size_t n, const std::string& quantity) const;
};

/// Error decay along one trajectory per replication, sampled after the first n
/// points for each requested n.
DecayReport decay_study(const DecayPlan& plan);

void write_csv(std::ostream& out, const DecayReport& report);

struct NormalityPlan {
  DistributionSpec spec;
  std::size_t n = 2000;
  StepSchedule schedule;
  std::size_t replications = 200;
  std::uint64_t master_seed = 0;
  InitializerConfig init;
  FitOptions fit;
  double level = 0.95;
  std::size_t grid_points = 512;
  std::size_t workers = 0;

  void validate() const;
};

struct NormalityReport {
  NormalityPlan plan;
  /// components[k][r]: k-th component of Q_n in replication r.
  std::vector<std::vector<double>> components;
  std::vector<KsResult> ks;
  std::vector<DensityGrid> densities;
  /// Fraction of replications whose confidence ellipsoid holds the truth.
  double coverage = 0.0;
  std::size_t ill_conditioned = 0;
  std::size_t failed = 0;
};

NormalityReport normality_study(const NormalityPlan& plan);

/// KS results and kernel-density grids for an arbitrary set of component samples.
void summarize_components(NormalityReport& report);

void write_csv(std::ostream& out, const NormalityReport& report);
void write_density_csv(std::ostream& out, const DensityGrid& grid);
nlohmann::json to_json(const NormalityReport& report);

// Presets reproducing the simulation study: mu = 0, r = 50 in R^3.

/// Shell(delta = 0.1) on the complete sphere.
DistributionSpec whole_sphere_spec();
/// Radial Gaussian (sigma = 1) on the half-sphere with non-negative y.
DistributionSpec half_sphere_spec();
/// The 3 x 5 grid c_gamma in {1, 5, 10}, alpha in {0.51, 0.6, 0.66, 0.75, 0.99}.
std::vector<StepSchedule> table_schedules();
/// gamma_n = n^{-2/3}.
StepSchedule default_schedule();

ExperimentPlan table1_plan(std::uint64_t seed);
ExperimentPlan table2_plan(std::uint64_t seed);
DecayPlan figure1_plan(std::uint64_t seed);
DecayPlan figure2_plan(std::uint64_t seed);
NormalityPlan figure3_plan(std::uint64_t seed);
ExperimentPlan figure4_plan(std::uint64_t seed);

/// "%.17g" formatting, exact round trip for doubles.
std::string format_number(double value);

}  // namespace spherefit
