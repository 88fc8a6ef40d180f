#pragma once

#include <variant>

#include "json.hpp"

#include "spherefit/random.hpp"
#include "spherefit/sphere.hpp"

namespace spherefit {

// Radial laws for W in X = mu + r * W * U.

/// W ~ Uniform[1 - delta, 1 + delta], 0 < delta < 1.
struct ShellLaw {
  double delta = 0.1;
};

/// Radial marginal of the density proportional to exp(-(|x - mu| - r)^2 / (2 sigma^2)).
struct RadialGaussianLaw {
  double sigma = 1.0;
};

using RadialLaw = std::variant<ShellLaw, RadialGaussianLaw>;

// Truncation regions of the unit sphere.

struct CompleteRegion {};

/// { u : sign * u[axis] >= 0 }.
struct HalfSpaceRegion {
  int axis = 0;
  int sign = 1;
};

/// { u : angle(u, axis) <= max_angle }, axis a unit vector.
struct CapRegion {
  Vector axis;
  double max_angle = 0.0;
};

using TruncationRegion = std::variant<CompleteRegion, HalfSpaceRegion, CapRegion>;

/// Generative law X = mu + r * W * U_Omega with W and U_Omega independent.
struct DistributionSpec {
  SphereParams truth;
  RadialLaw radial;
  TruncationRegion region;

  Eigen::Index dim() const { return truth.dim(); }

  /// Throws Error on any violated invariant.
  void validate() const;
};

void validate_law(const RadialLaw& law);
void validate_region(const TruncationRegion& region, Eigen::Index dim);

/// Membership predicate for unit vectors (with a small tolerance on the boundary).
bool region_contains(const TruncationRegion& region, const Eigen::Ref<const Vector>& u);

/// Uniform draw on the region: normalized Gaussian vector, rejected until inside.
Vector sample_unit_direction(const TruncationRegion& region, Eigen::Index dim, Rng& rng);

/// Draw of W. `radius` and `dim` are only used by the radial Gaussian law.
double sample_radial(const RadialLaw& law, double radius, Eigen::Index dim, Rng& rng);

Vector sample_observation(const DistributionSpec& spec, Rng& rng);

/// `count` observations as rows of an n x d matrix.
Matrix sample_observations(const DistributionSpec& spec, Eigen::Index count, Rng& rng);

struct RadialMoments {
  double mean = 1.0;      // E[W]
  double mean_inv = 1.0;  // E[1/W]
  double variance = 0.0;  // Var[W]
};

/// Moments of W. Closed form for the shell law, adaptive quadrature otherwise.
RadialMoments radial_moments(const RadialLaw& law, double radius, Eigen::Index dim);

struct DirectionMoments {
  Vector mean;    // E[U]
  Matrix second;  // E[U U^T]
};

/// Moments of U_Omega. Closed form for the complete sphere, quadrature over the
/// polar angle for caps and half-spaces.
DirectionMoments direction_moments(const TruncationRegion& region, Eigen::Index dim);

/// r* = r E[W], the identifiable radius.
double theoretical_r_star(const DistributionSpec& spec);

/// beta = E[W] E[1/W].
double theoretical_beta(const DistributionSpec& spec);

/// The identifiable parameter (mu, r*).
SphereParams identifiable_params(const DistributionSpec& spec);

void to_json(nlohmann::json& j, const DistributionSpec& spec);
void from_json(const nlohmann::json& j, DistributionSpec& spec);

}  // namespace spherefit
