#include "spherefit/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "spherefit/error.hpp"

namespace spherefit {

void CompactRegion::validate() const {
  if (!(center_radius > 0.0) || !(radius_radius > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "compact region radii must be positive");
  }
  if (!(radius_center - radius_radius > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "compact region must keep the radius strictly positive");
  }
  if (!center.allFinite()) {
    throw Error(ErrorKind::InvalidArgument, "compact region center must be finite");
  }
}

namespace {

// Rescaling onto the sphere of radius R lands within a few ulps of it; points that
// close count as inside so that projecting twice changes nothing.
double ball_slack(const CompactRegion& k) {
  return 8.0 * std::numeric_limits<double>::epsilon() * (k.center_radius + k.center.norm());
}

}  // namespace

bool CompactRegion::contains(const SphereParams& theta, double tolerance) const {
  return (theta.center - center).norm() <= center_radius + ball_slack(*this) + tolerance &&
         std::abs(theta.radius - radius_center) <= radius_radius + tolerance;
}

SphereParams CompactRegion::project(const SphereParams& theta) const {
  SphereParams out = theta;
  const Vector offset = theta.center - center;
  const double dist = offset.norm();
  if (dist > center_radius + ball_slack(*this)) out.center = center + (center_radius / dist) * offset;
  out.radius = std::clamp(theta.radius, radius_center - radius_radius, radius_center + radius_radius);
  return out;
}

double CompactRegion::boundary_distance(const SphereParams& theta) const {
  const double to_center_ball = center_radius - (theta.center - center).norm();
  const double to_radius_interval = radius_radius - std::abs(theta.radius - radius_center);
  return std::min(to_center_ball, to_radius_interval);
}

SphereParams circumsphere(const Eigen::Ref<const Matrix>& points) {
  const Eigen::Index d = points.cols();
  if (d < 2 || points.rows() != d + 1) {
    throw Error(ErrorKind::DimensionMismatch,
                "circumsphere needs d+1 points of dimension d >= 2, got " +
                    std::to_string(points.rows()) + " points of dimension " + std::to_string(d));
  }
  // With p_0 as origin: <p_i - p_0, c> = |p_i - p_0|^2 / 2.
  const Vector origin = points.row(0).transpose();
  Matrix a(d, d);
  Vector b(d);
  double scale = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    a.row(i) = points.row(i + 1) - origin.transpose();
    b(i) = 0.5 * a.row(i).squaredNorm();
  }
  for (Eigen::Index i = 0; i <= d; ++i) {
    for (Eigen::Index j = i + 1; j <= d; ++j) {
      scale = std::max(scale, (points.row(i) - points.row(j)).norm());
    }
  }
  Eigen::PartialPivLU<Matrix> lu(a);
  const double det = lu.determinant();
  if (!(scale > 0.0) || !(std::abs(det) >= 1e-10 * std::pow(scale, static_cast<double>(d)))) {
    throw Error(ErrorKind::DegenerateConfiguration, "points are affinely dependent");
  }
  const Vector offset = lu.solve(b);
  return SphereParams{origin + offset, offset.norm()};
}

double median(std::span<double> values) {
  if (values.empty()) throw Error(ErrorKind::InsufficientData, "median of an empty sample");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

Initialization initialize(const Eigen::Ref<const Matrix>& points, const InitializerConfig& config,
                          Rng& rng) {
  const Eigen::Index d = points.cols();
  const auto k = static_cast<Eigen::Index>(config.k_first);
  if (d < 2) throw Error(ErrorKind::InvalidArgument, "points must have dimension >= 2");
  if (config.k_first == 0 || config.n_quadruplets == 0) {
    throw Error(ErrorKind::InvalidArgument, "initializer needs k_first > 0 and n_quadruplets > 0");
  }
  if (points.rows() < k) {
    throw Error(ErrorKind::InsufficientData, "initializer needs at least " + std::to_string(k) +
                                                 " points, got " + std::to_string(points.rows()));
  }

  std::uniform_int_distribution<Eigen::Index> pick(0, k - 1);
  const std::size_t retry_budget = 100 * config.n_quadruplets;
  std::vector<std::vector<double>> coordinates(static_cast<std::size_t>(d));
  for (auto& c : coordinates) c.reserve(config.n_quadruplets);

  Matrix tuple(d + 1, d);
  std::size_t consecutive_failures = 0;
  std::size_t accepted = 0;
  while (accepted < config.n_quadruplets) {
    for (Eigen::Index i = 0; i <= d; ++i) tuple.row(i) = points.row(pick(rng));
    try {
      const SphereParams s = circumsphere(tuple);
      for (Eigen::Index j = 0; j < d; ++j) coordinates[static_cast<std::size_t>(j)].push_back(s.center(j));
      ++accepted;
      consecutive_failures = 0;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::DegenerateConfiguration) throw;
      if (++consecutive_failures > retry_budget) {
        throw Error(ErrorKind::DegenerateData, "too many consecutive degenerate tuples");
      }
    }
  }

  Vector center(d);
  for (Eigen::Index j = 0; j < d; ++j) center(j) = median(coordinates[static_cast<std::size_t>(j)]);

  double radius = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) radius += (points.row(i).transpose() - center).norm();
  radius /= static_cast<double>(k);

  Initialization init{SphereParams{center, radius},
                      CompactRegion{center, radius / 10.0, radius, radius / 10.0}};
  init.region.validate();
  return init;
}

}  // namespace spherefit
