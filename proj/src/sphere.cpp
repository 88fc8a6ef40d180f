#include "spherefit/sphere.hpp"

#include <cmath>

#include "spherefit/error.hpp"

namespace spherefit {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::InvalidRegion: return "invalid-region";
    case ErrorKind::DimensionMismatch: return "dimension-mismatch";
    case ErrorKind::DegenerateConfiguration: return "degenerate-configuration";
    case ErrorKind::InsufficientData: return "insufficient-data";
    case ErrorKind::DegenerateData: return "degenerate-data";
    case ErrorKind::Numeric: return "numeric";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

bool SphereParams::is_valid() const {
  return center.size() >= 2 && center.allFinite() && std::isfinite(radius) && radius > 0.0;
}

SphereParams make_sphere(Vector center, double radius) {
  SphereParams theta{std::move(center), radius};
  if (theta.center.size() < 2) {
    throw Error(ErrorKind::InvalidArgument, "sphere dimension must be at least 2");
  }
  if (!theta.is_valid()) {
    throw Error(ErrorKind::InvalidArgument, "sphere needs finite center and radius > 0");
  }
  return theta;
}

Vector stack(const SphereParams& theta) {
  Vector v(theta.dim() + 1);
  v.head(theta.dim()) = theta.center;
  v(theta.dim()) = theta.radius;
  return v;
}

SphereParams unstack(const Eigen::Ref<const Vector>& stacked) {
  const Eigen::Index d = stacked.size() - 1;
  return SphereParams{stacked.head(d), stacked(d)};
}

double distance(const SphereParams& a, const SphereParams& b) {
  const double dr = a.radius - b.radius;
  return std::sqrt((a.center - b.center).squaredNorm() + dr * dr);
}

}  // namespace spherefit
