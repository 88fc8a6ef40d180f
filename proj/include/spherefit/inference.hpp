#pragma once

#include <cstddef>

#include "json.hpp"

#include "spherefit/model.hpp"
#include "spherefit/sphere.hpp"

namespace spherefit {

/// Running plug-in estimates of the Hessian (gamma_hat) and of the gradient-noise
/// covariance (sigma_hat), both seeded with the identity at n = 1.
struct CovarianceAccumulators {
  std::size_t n = 1;
  Matrix gamma_hat;
  Matrix sigma_hat;

  static CovarianceAccumulators identity(Eigen::Index dim);
  Eigen::Index dim() const { return gamma_hat.rows() - 1; }
};

/// Folds one sample, evaluated at `theta_bar`, into the accumulators:
///   n G_n = (n-1) G_{n-1} + [(1 - A/rho) I + (A/rho) U U^T, U; U^T, 1]
///   n S_n = (n-1) S_{n-1} + v v^T,  v = (A - rho) (U, 1)
/// with rho = |x - Z|, U = (x - Z)/rho and theta_bar = (Z, A). v is the
/// per-sample gradient at theta_bar. Returns false (and leaves `acc`
/// untouched) when x sits on the center.
bool update_accumulators(CovarianceAccumulators& acc, const Eigen::Ref<const Vector>& x,
                         const SphereParams& theta_bar);

/// Accumulators computed over a whole sample at a fixed parameter.
CovarianceAccumulators accumulate_at(const Eigen::Ref<const Matrix>& points, const SphereParams& theta);

/// Hessian of the criterion at (mu, r*): [I - beta (I - E[UU^T]), E[U]; E[U]^T, 1].
Matrix theoretical_gamma(const DistributionSpec& spec);

/// Gradient-noise covariance at (mu, r*): r^2 Var[W] [E[UU^T], E[U]; E[U]^T, 1].
Matrix theoretical_sigma(const DistributionSpec& spec);

struct InverseSqrt {
  Matrix matrix;
  std::size_t floored = 0;
};

/// Symmetric inverse square root through an eigendecomposition; eigenvalues are
/// floored at `relative_floor * trace / dim`.
InverseSqrt symmetric_inverse_sqrt(const Matrix& m, double relative_floor = 1e-10);

struct QStatistic {
  Vector q;
  std::size_t floored = 0;
  /// Flooring hit more than half of the spectrum of sigma_hat.
  bool ill_conditioned = false;
};

/// Q_n = sqrt(n) sigma_hat^{-1/2} gamma_hat (theta_bar - theta). Requires n >= d+1.
QStatistic q_statistic(const CovarianceAccumulators& acc, const SphereParams& theta_bar,
                       const SphereParams& theta);

/// { theta : (theta_bar - theta)^T shape (theta_bar - theta) <= threshold },
/// shape = n gamma_hat^T sigma_hat^{-1} gamma_hat, threshold = chi2_{d+1}(level).
struct ConfidenceEllipsoid {
  SphereParams center;
  Matrix shape;
  double threshold = 0.0;
  double level = 0.0;
  bool ill_conditioned = false;

  bool contains(const SphereParams& theta) const;
  /// Half-widths of the per-parameter intervals (projections of the ellipsoid).
  Vector half_widths() const;
  double log_volume() const;
};

ConfidenceEllipsoid confidence_ball(const CovarianceAccumulators& acc, const SphereParams& theta_bar,
                                    double level);

nlohmann::json matrix_to_json(const Matrix& m);
void to_json(nlohmann::json& j, const ConfidenceEllipsoid& ellipsoid);

}  // namespace spherefit
