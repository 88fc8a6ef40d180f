#include "spherefit/inference.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "spherefit/error.hpp"
#include "spherefit/stats.hpp"

namespace spherefit {

namespace {

// [[M, m], [m^T, 1]] from E[UU^T] and E[U].
Matrix bordered(const Matrix& top_left, const Vector& border) {
  const Eigen::Index d = border.size();
  Matrix out(d + 1, d + 1);
  out.topLeftCorner(d, d) = top_left;
  out.topRightCorner(d, 1) = border;
  out.bottomLeftCorner(1, d) = border.transpose();
  out(d, d) = 1.0;
  return out;
}

}  // namespace

CovarianceAccumulators CovarianceAccumulators::identity(Eigen::Index dim) {
  if (dim < 2) throw Error(ErrorKind::InvalidArgument, "accumulator dimension must be >= 2");
  return CovarianceAccumulators{1, Matrix::Identity(dim + 1, dim + 1), Matrix::Identity(dim + 1, dim + 1)};
}

bool update_accumulators(CovarianceAccumulators& acc, const Eigen::Ref<const Vector>& x,
                         const SphereParams& theta_bar) {
  const Eigen::Index d = acc.dim();
  if (x.size() != d || theta_bar.dim() != d) {
    throw Error(ErrorKind::DimensionMismatch, "accumulator update dimension mismatch");
  }
  const Vector offset = x - theta_bar.center;
  const double rho = offset.norm();
  if (rho < 1e-12 * (1.0 + theta_bar.center.norm())) return false;
  const Vector u = offset / rho;
  const double ratio = theta_bar.radius / rho;

  Matrix gamma_inc = bordered((1.0 - ratio) * Matrix::Identity(d, d) + ratio * u * u.transpose(), u);
  Vector v(d + 1);
  v.head(d) = (theta_bar.radius - rho) * u;
  v(d) = theta_bar.radius - rho;

  ++acc.n;
  const double w = 1.0 / static_cast<double>(acc.n);
  acc.gamma_hat += w * (gamma_inc - acc.gamma_hat);
  acc.sigma_hat += w * (v * v.transpose() - acc.sigma_hat);
  return true;
}

CovarianceAccumulators accumulate_at(const Eigen::Ref<const Matrix>& points, const SphereParams& theta) {
  CovarianceAccumulators acc = CovarianceAccumulators::identity(points.cols());
  for (Eigen::Index i = 0; i < points.rows(); ++i) update_accumulators(acc, points.row(i).transpose(), theta);
  return acc;
}

Matrix theoretical_gamma(const DistributionSpec& spec) {
  spec.validate();
  const Eigen::Index d = spec.dim();
  const double beta = theoretical_beta(spec);
  const DirectionMoments u = direction_moments(spec.region, d);
  const Matrix identity = Matrix::Identity(d, d);
  return bordered(identity - beta * (identity - u.second), u.mean);
}

Matrix theoretical_sigma(const DistributionSpec& spec) {
  spec.validate();
  const double r = spec.truth.radius;
  const RadialMoments w = radial_moments(spec.radial, r, spec.dim());
  const DirectionMoments u = direction_moments(spec.region, spec.dim());
  return r * r * w.variance * bordered(u.second, u.mean);
}

InverseSqrt symmetric_inverse_sqrt(const Matrix& m, double relative_floor) {
  const Matrix sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  if (eig.info() != Eigen::Success) throw Error(ErrorKind::Numeric, "eigendecomposition failed");
  const double floor = relative_floor * sym.trace() / static_cast<double>(sym.rows());
  if (!(floor > 0.0)) throw Error(ErrorKind::Numeric, "matrix has non-positive trace");
  Vector values = eig.eigenvalues();
  std::size_t floored = 0;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (!(values(i) >= floor)) {
      values(i) = floor;
      ++floored;
    }
  }
  const Matrix& vectors = eig.eigenvectors();
  return InverseSqrt{vectors * values.cwiseInverse().cwiseSqrt().asDiagonal() * vectors.transpose(), floored};
}

QStatistic q_statistic(const CovarianceAccumulators& acc, const SphereParams& theta_bar,
                       const SphereParams& theta) {
  const Eigen::Index d = acc.dim();
  if (acc.n < static_cast<std::size_t>(d + 1)) {
    throw Error(ErrorKind::InsufficientData, "Q statistic needs n >= d + 1");
  }
  if (theta_bar.dim() != d || theta.dim() != d) {
    throw Error(ErrorKind::DimensionMismatch, "Q statistic dimension mismatch");
  }
  const InverseSqrt root = symmetric_inverse_sqrt(acc.sigma_hat);
  const Vector diff = stack(theta_bar) - stack(theta);
  QStatistic out;
  out.q = std::sqrt(static_cast<double>(acc.n)) * root.matrix * acc.gamma_hat * diff;
  out.floored = root.floored;
  out.ill_conditioned = 2 * root.floored > static_cast<std::size_t>(d + 1);
  return out;
}

bool ConfidenceEllipsoid::contains(const SphereParams& theta) const {
  const Vector diff = stack(center) - stack(theta);
  return diff.dot(shape * diff) <= threshold;
}

Vector ConfidenceEllipsoid::half_widths() const {
  const Matrix inverse = shape.inverse();
  return (threshold * inverse.diagonal()).cwiseSqrt();
}

double ConfidenceEllipsoid::log_volume() const {
  const double k = static_cast<double>(shape.rows());
  const double log_unit_ball = 0.5 * k * std::log(std::numbers::pi) - std::lgamma(0.5 * k + 1.0);
  const double log_det = Eigen::LDLT<Matrix>(shape).vectorD().array().log().sum();
  return log_unit_ball + 0.5 * k * std::log(threshold) - 0.5 * log_det;
}

ConfidenceEllipsoid confidence_ball(const CovarianceAccumulators& acc, const SphereParams& theta_bar,
                                    double level) {
  if (!(level > 0.0 && level < 1.0)) throw Error(ErrorKind::InvalidArgument, "level must lie in (0, 1)");
  const Eigen::Index d = acc.dim();
  if (acc.n < static_cast<std::size_t>(d + 1)) {
    throw Error(ErrorKind::InsufficientData, "confidence ball needs n >= d + 1");
  }
  const InverseSqrt root = symmetric_inverse_sqrt(acc.sigma_hat);
  const Matrix whitened = root.matrix * acc.gamma_hat;
  ConfidenceEllipsoid out;
  out.center = theta_bar;
  out.shape = static_cast<double>(acc.n) * whitened.transpose() * whitened;
  out.threshold = chi_squared_quantile(level, static_cast<double>(d + 1));
  out.level = level;
  out.ill_conditioned = 2 * root.floored > static_cast<std::size_t>(d + 1);
  return out;
}

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j) row[static_cast<std::size_t>(j)] = m(i, j);
    rows.push_back(row);
  }
  return rows;
}

void to_json(nlohmann::json& j, const ConfidenceEllipsoid& ellipsoid) {
  const Vector c = stack(ellipsoid.center);
  j = nlohmann::json{{"center", std::vector<double>(c.data(), c.data() + c.size())},
                     {"shape", matrix_to_json(ellipsoid.shape)},
                     {"threshold", ellipsoid.threshold},
                     {"level", ellipsoid.level}};
}

}  // namespace spherefit
