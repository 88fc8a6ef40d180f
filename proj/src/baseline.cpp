#include "spherefit/baseline.hpp"

#include <cmath>

#include "spherefit/error.hpp"

namespace spherefit {

namespace {

bool at_center(double dist, const Vector& center) { return dist < 1e-12 * (1.0 + center.norm()); }

Vector center_step(const Eigen::Ref<const Matrix>& points, const SphereParams& theta) {
  Vector sum = Vector::Zero(points.cols());
  Eigen::Index used = 0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const Vector x = points.row(i).transpose();
    const Vector offset = x - theta.center;
    const double dist = offset.norm();
    if (at_center(dist, theta.center)) continue;
    sum += x - (theta.radius / dist) * offset;
    ++used;
  }
  if (used == 0) throw Error(ErrorKind::DegenerateData, "every point coincides with the center");
  return sum / static_cast<double>(used);
}

double radius_step(const Eigen::Ref<const Matrix>& points, const Vector& center) {
  double sum = 0.0;
  Eigen::Index used = 0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const double dist = (points.row(i).transpose() - center).norm();
    if (at_center(dist, center)) continue;
    sum += dist;
    ++used;
  }
  if (used == 0) throw Error(ErrorKind::DegenerateData, "every point coincides with the center");
  return sum / static_cast<double>(used);
}

}  // namespace

void BackfitConfig::validate() const {
  if (max_iterations <= 0 || !(tolerance > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "backfit needs max_iterations > 0 and tolerance > 0");
  }
}

BackfitResult backfit(const Eigen::Ref<const Matrix>& points, const SphereParams& init,
                      const BackfitConfig& config) {
  config.validate();
  if (points.cols() != init.dim()) throw Error(ErrorKind::DimensionMismatch, "backfit dimension mismatch");
  if (points.rows() < 2) throw Error(ErrorKind::InsufficientData, "backfit needs at least two points");

  BackfitResult result;
  result.estimate = init;
  result.trace.push_back(init);
  for (int t = 1; t <= config.max_iterations; ++t) {
    const SphereParams& prev = result.estimate;
    SphereParams next;
    next.center = center_step(points, prev);
    next.radius = radius_step(points, config.simultaneous ? prev.center : next.center);
    if (!next.center.allFinite() || !std::isfinite(next.radius)) {
      throw Error(ErrorKind::Numeric, "backfit iterate became non-finite");
    }
    const double change = distance(next, prev);
    result.estimate = next;
    result.trace.push_back(std::move(next));
    result.iterations = t;
    if (change <= config.tolerance * std::abs(result.estimate.radius)) {
      result.converged = true;
      break;
    }
  }
  return result;
}

}  // namespace spherefit
