#pragma once

#include <cstddef>
#include <span>

#include "spherefit/random.hpp"
#include "spherefit/sphere.hpp"

namespace spherefit {

/// Product of closed balls B(center, center_radius) x [radius_center +- radius_radius],
/// the constraint set of the projected recursion.
struct CompactRegion {
  Vector center;
  double center_radius = 0.0;
  double radius_center = 0.0;
  double radius_radius = 0.0;

  /// Throws unless both radii are positive and the projected radius stays > 0.
  void validate() const;

  bool contains(const SphereParams& theta, double tolerance = 0.0) const;

  /// Component-wise radial projection onto the region.
  SphereParams project(const SphereParams& theta) const;

  /// Distance from `theta` to the boundary of the region (negative outside).
  double boundary_distance(const SphereParams& theta) const;
};

/// Sphere through d+1 points of R^d (given as a (d+1) x d matrix, one point per row).
/// Throws DegenerateConfiguration when the points are affinely dependent.
SphereParams circumsphere(const Eigen::Ref<const Matrix>& points);

struct InitializerConfig {
  std::size_t k_first = 50;
  std::size_t n_quadruplets = 200;
};

struct Initialization {
  SphereParams estimate;
  CompactRegion region;
};

/// Robust starting point: coordinatewise median of the circumcenters of
/// `n_quadruplets` random (d+1)-tuples drawn with replacement from the first
/// `k_first` points, radius = mean distance of those points to the median,
/// region half-widths = radius / 10.
Initialization initialize(const Eigen::Ref<const Matrix>& points, const InitializerConfig& config,
                          Rng& rng);

/// Median of a sample; the mean of the two middle order statistics for even sizes.
double median(std::span<double> values);

}  // namespace spherefit
