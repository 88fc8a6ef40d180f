#include "spherefit/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "spherefit/error.hpp"

namespace spherefit {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

double regularized_gamma_p(double a, double x) {
  if (!(a > 0.0) || x < 0.0 || std::isnan(x)) {
    throw Error(ErrorKind::InvalidArgument, "regularized_gamma_p needs a > 0 and x >= 0");
  }
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  const double log_prefactor = -x + a * std::log(x) - std::lgamma(a);
  constexpr double eps = 1e-16;
  constexpr int max_iter = 10'000;

  if (x < a + 1.0) {
    // Series expansion.
    double term = 1.0 / a;
    double sum = term;
    for (int n = 1; n < max_iter; ++n) {
      term *= x / (a + n);
      sum += term;
      if (std::abs(term) < std::abs(sum) * eps) break;
    }
    return std::clamp(sum * std::exp(log_prefactor), 0.0, 1.0);
  }

  // Continued fraction for Q(a, x), modified Lentz.
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < max_iter; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < eps) break;
  }
  return std::clamp(1.0 - std::exp(log_prefactor) * h, 0.0, 1.0);
}

double chi_squared_cdf(double x, double dof) {
  if (x <= 0.0) return 0.0;
  return regularized_gamma_p(0.5 * dof, 0.5 * x);
}

double chi_squared_quantile(double probability, double dof) {
  if (!(probability > 0.0 && probability < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "quantile level must lie in (0, 1)");
  }
  if (!(dof > 0.0)) throw Error(ErrorKind::InvalidArgument, "degrees of freedom must be positive");
  double lo = 0.0;
  double hi = std::max(1.0, dof);
  while (chi_squared_cdf(hi, dof) < probability) {
    lo = hi;
    hi *= 2.0;
  }
  for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (chi_squared_cdf(mid, dof) < probability ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double kolmogorov_survival(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 1.18) {
    // Theta-function form, fast for small lambda.
    const double pi2 = std::numbers::pi * std::numbers::pi;
    double cdf = 0.0;
    for (int k = 1; k <= 50; ++k) {
      const double m = 2.0 * k - 1.0;
      const double term = std::exp(-m * m * pi2 / (8.0 * lambda * lambda));
      cdf += term;
      if (k >= 10 && term < 1e-18) break;
    }
    cdf *= std::sqrt(2.0 * std::numbers::pi) / lambda;
    return std::clamp(1.0 - cdf, 0.0, 1.0);
  }
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += sign * term;
    sign = -sign;
    if (k >= 10 && term < 1e-18) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_normal_test(std::vector<double> samples) {
  if (samples.size() < 20) throw Error(ErrorKind::InsufficientData, "KS test needs at least 20 samples");
  std::sort(samples.begin(), samples.end());
  const double m = static_cast<double>(samples.size());
  double statistic = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = normal_cdf(samples[i]);
    statistic = std::max({statistic, (static_cast<double>(i) + 1.0) / m - f, f - static_cast<double>(i) / m});
  }
  // Stephens' finite-sample correction of the asymptotic argument.
  const double root = std::sqrt(m);
  const double lambda = (root + 0.12 + 0.11 / root) * statistic;
  return KsResult{statistic, kolmogorov_survival(lambda)};
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw Error(ErrorKind::InsufficientData, "quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double h = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

FiveNumber five_number(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorKind::InsufficientData, "summary of an empty sample");
  std::sort(values.begin(), values.end());
  return FiveNumber{values.front(), quantile(values, 0.25), quantile(values, 0.5),
                    quantile(values, 0.75), values.back()};
}

DensityGrid kernel_density(std::span<const double> samples, std::size_t grid_points) {
  if (samples.size() < 2) throw Error(ErrorKind::InsufficientData, "density estimate needs 2+ samples");
  if (grid_points < 2) throw Error(ErrorKind::InvalidArgument, "density grid needs 2+ points");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double m = static_cast<double>(sorted.size());
  const double mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / m;
  double ss = 0.0;
  for (double v : sorted) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (m - 1.0));
  const double iqr = quantile(sorted, 0.75) - quantile(sorted, 0.25);
  double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
  if (!(spread > 0.0)) spread = 1e-6 * (1.0 + std::abs(mean));
  const double h = 0.9 * spread * std::pow(m, -0.2);

  DensityGrid grid;
  grid.bandwidth = h;
  const double lo = sorted.front() - 5.0 * h;
  const double hi = sorted.back() + 5.0 * h;
  const double dx = (hi - lo) / static_cast<double>(grid_points - 1);
  grid.x.resize(grid_points);
  grid.density.resize(grid_points);
  for (std::size_t i = 0; i < grid_points; ++i) {
    const double x = lo + dx * static_cast<double>(i);
    double acc = 0.0;
    for (double v : sorted) acc += normal_pdf((x - v) / h);
    grid.x[i] = x;
    grid.density[i] = acc / (m * h);
  }
  return grid;
}

}  // namespace spherefit
