#pragma once

#include <vector>

#include "spherefit/sphere.hpp"

namespace spherefit {

struct BackfitConfig {
  int max_iterations = 500;
  /// Stop once |theta_{t+1} - theta_t| <= tolerance * r_{t+1}.
  double tolerance = 1e-8;
  /// Update mu and r from the same previous iterate instead of mu first.
  bool simultaneous = false;

  void validate() const;
};

struct BackfitResult {
  SphereParams estimate;
  int iterations = 0;
  bool converged = false;
  /// Iterates theta_0 (the start), theta_1, ..., in order.
  std::vector<SphereParams> trace;
};

/// Fixed-point iteration on the empirical moment equations
///   mu = mean(X_i - r (X_i - mu) / |X_i - mu|),   r = mean |X_i - mu|.
/// Points sitting on the running center are left out of the means.
BackfitResult backfit(const Eigen::Ref<const Matrix>& points, const SphereParams& init,
                      const BackfitConfig& config = {});

}  // namespace spherefit
