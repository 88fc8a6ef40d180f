#include "spherefit/prm.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "spherefit/error.hpp"

namespace spherefit {

void StepSchedule::validate() const {
  if (!(c_gamma > 0.0) || !std::isfinite(c_gamma)) {
    throw Error(ErrorKind::InvalidArgument, "c_gamma must be positive");
  }
  if (!(alpha > 0.5 && alpha < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "alpha must lie in (1/2, 1)");
  }
}

double StepSchedule::step(std::size_t n) const {
  return c_gamma * std::pow(static_cast<double>(n), -alpha);
}

std::optional<Gradient> stochastic_gradient(const Eigen::Ref<const Vector>& x, const SphereParams& theta) {
  if (x.size() != theta.dim()) {
    throw Error(ErrorKind::DimensionMismatch, "sample has dimension " + std::to_string(x.size()) +
                                                  ", estimate has " + std::to_string(theta.dim()));
  }
  const Vector diff = theta.center - x;
  const double dist = diff.norm();
  if (dist < 1e-12 * (1.0 + theta.center.norm())) return std::nullopt;
  return Gradient{(1.0 - theta.radius / dist) * diff, theta.radius - dist};
}

EstimatorState EstimatorState::begin(const SphereParams& theta1, const StepSchedule& schedule,
                                     std::optional<CompactRegion> region, std::size_t avg_burn) {
  schedule.validate();
  if (theta1.dim() < 2) throw Error(ErrorKind::InvalidArgument, "estimate dimension must be >= 2");
  EstimatorState state;
  state.schedule = schedule;
  state.avg_burn = avg_burn;
  state.theta_hat = theta1;
  if (region) {
    region->validate();
    if (region->center.size() != theta1.dim()) {
      throw Error(ErrorKind::DimensionMismatch, "compact region dimension mismatch");
    }
    state.theta_hat = region->project(theta1);
    state.region = std::move(region);
  }
  state.theta_bar = state.theta_hat;
  state.start = state.theta_hat;
  return state;
}

UpdateOutcome prm_update(EstimatorState& state, const Eigen::Ref<const Vector>& x) {
  if (x.size() != state.theta_hat.dim()) {
    throw Error(ErrorKind::DimensionMismatch, "sample has dimension " + std::to_string(x.size()) +
                                                  ", estimate has " +
                                                  std::to_string(state.theta_hat.dim()));
  }
  if (state.frozen) return UpdateOutcome::Frozen;

  const auto grad = stochastic_gradient(x, state.theta_hat);
  if (!grad) {
    ++state.skipped;
    return UpdateOutcome::Skipped;
  }

  const double gamma = state.schedule.step(state.n);
  SphereParams next{state.theta_hat.center - gamma * grad->center,
                    state.theta_hat.radius - gamma * grad->radius};
  if (!next.center.allFinite() || !std::isfinite(next.radius)) {
    state.diverged = true;
    state.frozen = true;
    return UpdateOutcome::Frozen;
  }

  auto outcome = UpdateOutcome::Moved;
  if (state.region) {
    if (!state.region->contains(next)) {
      next = state.region->project(next);
      ++state.projection_count;
      state.last_projection_step = state.n;
      outcome = UpdateOutcome::Projected;
    }
  } else if (next.radius <= 0.0 || distance(next, state.start) > state.divergence_threshold) {
    state.diverged = true;
  }

  state.theta_hat = std::move(next);
  ++state.n;

  const double count = state.n > state.avg_burn ? static_cast<double>(state.n - state.avg_burn) : 1.0;
  const double w = 1.0 / count;
  state.theta_bar.center += w * (state.theta_hat.center - state.theta_bar.center);
  state.theta_bar.radius += w * (state.theta_hat.radius - state.theta_bar.radius);
  return outcome;
}

FitSummary summarize(const EstimatorState& state) {
  return FitSummary{state.n, state.theta_hat, state.theta_bar, state.projection_count, state.skipped,
                    state.diverged};
}

FitResult fit(const Eigen::Ref<const Matrix>& points, const Initialization& init,
              const StepSchedule& schedule, const FitOptions& options) {
  if (points.cols() != init.estimate.dim()) {
    throw Error(ErrorKind::DimensionMismatch, "points and initial estimate differ in dimension");
  }
  const Eigen::Index first = options.fresh_init ? static_cast<Eigen::Index>(options.k_first) : 0;
  if (points.rows() <= first) {
    throw Error(ErrorKind::InsufficientData, "no points left for the recursion after initialization");
  }
  std::optional<CompactRegion> region;
  if (options.project) region = init.region;
  EstimatorState state = EstimatorState::begin(init.estimate, schedule, region, options.avg_burn);
  for (Eigen::Index i = first; i < points.rows(); ++i) prm_update(state, points.row(i).transpose());
  FitSummary summary = summarize(state);
  return FitResult{std::move(state), std::move(summary)};
}

void to_json(nlohmann::json& j, const SphereParams& theta) {
  j = nlohmann::json{{"center", std::vector<double>(theta.center.data(),
                                                    theta.center.data() + theta.center.size())},
                     {"radius", theta.radius}};
}

void to_json(nlohmann::json& j, const FitSummary& summary) {
  j = nlohmann::json{{"n", summary.n},
                     {"theta_hat", summary.theta_hat},
                     {"theta_bar", summary.theta_bar},
                     {"projections", summary.projections},
                     {"skipped", summary.skipped},
                     {"diverged", summary.diverged}};
}

}  // namespace spherefit
