#pragma once

#include <cstddef>
#include <optional>

#include "json.hpp"

#include "spherefit/geometry.hpp"
#include "spherefit/sphere.hpp"

namespace spherefit {

/// gamma_n = c_gamma * n^{-alpha}, with c_gamma > 0 and 1/2 < alpha < 1.
struct StepSchedule {
  double c_gamma = 1.0;
  double alpha = 2.0 / 3.0;

  void validate() const;
  double step(std::size_t n) const;
};

/// Per-sample gradient of (1/2)(|x - z| - a)^2 with respect to (z, a).
struct Gradient {
  Vector center;
  double radius = 0.0;
};

/// h(x, theta) = (z - x - a (z - x)/|z - x|, a - |x - z|).
/// Returns nullopt when x sits on the current center, where h is undefined.
std::optional<Gradient> stochastic_gradient(const Eigen::Ref<const Vector>& x, const SphereParams& theta);

/// Recursion state. With `region` set the iterate is projected onto it after each
/// step; without it the plain Robbins-Monro recursion runs and may diverge.
struct EstimatorState {
  std::size_t n = 1;
  SphereParams theta_hat;
  SphereParams theta_bar;
  StepSchedule schedule;
  std::optional<CompactRegion> region;
  std::size_t projection_count = 0;
  std::size_t last_projection_step = 0;
  std::size_t skipped = 0;
  /// Iterates with index <= avg_burn are left out of theta_bar.
  std::size_t avg_burn = 0;
  bool diverged = false;
  /// Set once a raw update overflowed; the state no longer moves.
  bool frozen = false;
  /// Unprojected runs are flagged diverged once |theta_hat - start| exceeds this.
  double divergence_threshold = 1e6;
  SphereParams start;

  static EstimatorState begin(const SphereParams& theta1, const StepSchedule& schedule,
                              std::optional<CompactRegion> region, std::size_t avg_burn = 0);
};

enum class UpdateOutcome { Moved, Projected, Skipped, Frozen };

/// One step of theta_{n+1} = pi(theta_n - gamma_n h(x, theta_n)) followed by the
/// running average. Skipped samples leave the state (including n) untouched apart
/// from the skip counter. A non-finite raw update freezes the state and marks it
/// diverged.
UpdateOutcome prm_update(EstimatorState& state, const Eigen::Ref<const Vector>& x);

struct FitOptions {
  bool project = true;
  /// Hold the initializer's points out of the recursion stream.
  bool fresh_init = false;
  std::size_t k_first = 50;
  std::size_t avg_burn = 0;
};

struct FitSummary {
  std::size_t n = 0;
  SphereParams theta_hat;
  SphereParams theta_bar;
  std::size_t projections = 0;
  std::size_t skipped = 0;
  bool diverged = false;
};

struct FitResult {
  EstimatorState state;
  FitSummary summary;
};

FitSummary summarize(const EstimatorState& state);

/// Runs the recursion over the rows of `points`, starting from `init`.
FitResult fit(const Eigen::Ref<const Matrix>& points, const Initialization& init,
              const StepSchedule& schedule, const FitOptions& options = {});

void to_json(nlohmann::json& j, const SphereParams& theta);
void to_json(nlohmann::json& j, const FitSummary& summary);

}  // namespace spherefit
