#pragma once

#include <Eigen/Dense>

namespace spherefit {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A sphere (center, radius) in R^d; used both for the truth and for estimates.
///
/// The struct itself does not enforce `radius > 0` because the unprojected
/// recursion may legitimately wander to non-positive radii. Use
/// `make_sphere` at API boundaries where the invariant must hold.
struct SphereParams {
  Vector center;
  double radius = 1.0;

  Eigen::Index dim() const { return center.size(); }
  bool is_valid() const;
};

/// Validated constructor: d >= 2, finite coordinates, radius > 0.
SphereParams make_sphere(Vector center, double radius);

/// Stacks (center, radius) into a single vector of length d+1.
Vector stack(const SphereParams& theta);
SphereParams unstack(const Eigen::Ref<const Vector>& stacked);

/// Euclidean distance in the product space R^d x R.
double distance(const SphereParams& a, const SphereParams& b);

}  // namespace spherefit
