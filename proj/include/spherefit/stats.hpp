#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace spherefit {

double normal_cdf(double x);
double normal_pdf(double x);

/// Regularized lower incomplete gamma P(a, x).
double regularized_gamma_p(double a, double x);

double chi_squared_cdf(double x, double dof);

/// Inverse of chi_squared_cdf by bisection; relative error well below 1e-8.
double chi_squared_quantile(double probability, double dof);

/// P(K > lambda) for the limiting Kolmogorov distribution.
double kolmogorov_survival(double lambda);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// One-sample Kolmogorov-Smirnov test against N(0, 1). Needs at least 20 samples;
/// the input need not be sorted.
KsResult ks_normal_test(std::vector<double> samples);

struct DensityGrid {
  std::vector<double> x;
  std::vector<double> density;
  double bandwidth = 0.0;
};

/// Gaussian kernel density estimate with Silverman's bandwidth on a regular grid
/// spanning the sample +- 5 bandwidths.
DensityGrid kernel_density(std::span<const double> samples, std::size_t grid_points = 512);

struct FiveNumber {
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
};

/// Quantile with linear interpolation between order statistics.
double quantile(std::vector<double> values, double p);
FiveNumber five_number(std::vector<double> values);

}  // namespace spherefit
