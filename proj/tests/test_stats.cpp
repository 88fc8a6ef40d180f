#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "spherefit/random.hpp"
#include "spherefit/stats.hpp"

using namespace spherefit;

TEST(Normal, CdfAgainstErfc) {
  for (double x = -8.0; x <= 8.0; x += 0.25) EXPECT_NEAR(normal_cdf(x), oracle::phi(x), 1e-15);
  EXPECT_NEAR(normal_pdf(0.0), 1.0 / std::sqrt(2.0 * M_PI), 1e-16);
}

TEST(Gamma, ClosedFormsAndSimpson) {
  // P(1, x) = 1 - e^{-x}; P(2, x) = 1 - (1 + x) e^{-x}.
  for (double x : {0.01, 0.5, 2.0, 10.0, 40.0}) {
    EXPECT_NEAR(regularized_gamma_p(1.0, x), 1.0 - std::exp(-x), 1e-14);
    EXPECT_NEAR(regularized_gamma_p(2.0, x), 1.0 - (1.0 + x) * std::exp(-x), 1e-14);
  }
  for (double x : {0.3, 3.0, 12.0}) EXPECT_NEAR(regularized_gamma_p(0.5, x), std::erf(std::sqrt(x)), 1e-14);
  for (double a : {2.5, 7.0}) {
    for (double x : {0.3, 3.0, 12.0}) {
      const double integral = oracle::simpson(
          [a](double t) { return t <= 0 ? 0.0 : std::pow(t, a - 1.0) * std::exp(-t); }, 0.0, x, 2000000);
      const double expected = integral / std::tgamma(a);
      EXPECT_NEAR(regularized_gamma_p(a, x), expected, 1e-9) << a << " " << x;
    }
  }
  EXPECT_EQ(regularized_gamma_p(3.0, 0.0), 0.0);
}

TEST(ChiSquared, Quantiles) {
  // Reference values from standard chi-squared tables.
  EXPECT_NEAR(chi_squared_quantile(0.95, 4.0), 9.487729036781154, 9.4877 * 1e-8);
  EXPECT_NEAR(chi_squared_quantile(0.95, 1.0), 3.841458820694124, 3.84 * 1e-8);
  EXPECT_NEAR(chi_squared_quantile(0.99, 6.0), 16.811893829770927, 16.8 * 1e-8);
  EXPECT_NEAR(chi_squared_quantile(0.5, 3.0), 2.3659738843753377, 2.37 * 1e-8);
  // Two degrees of freedom: closed form -2 log(1 - p).
  for (double p : {0.1, 0.5, 0.9, 0.999}) {
    EXPECT_NEAR(chi_squared_quantile(p, 2.0), -2.0 * std::log1p(-p), 1e-8 * -2.0 * std::log1p(-p));
  }
  for (double p : {0.05, 0.5, 0.95}) EXPECT_NEAR(chi_squared_cdf(chi_squared_quantile(p, 5.0), 5.0), p, 1e-10);
}

TEST(Kolmogorov, SurvivalSeries) {
  // Classical critical values of the limiting distribution.
  EXPECT_NEAR(kolmogorov_survival(1.3580986), 0.05, 1e-6);
  EXPECT_NEAR(kolmogorov_survival(1.6276236), 0.01, 1e-6);
  EXPECT_NEAR(kolmogorov_survival(1.2238478), 0.10, 1e-6);
  EXPECT_NEAR(kolmogorov_survival(0.3), 0.9999906941986655, 1e-9);
  // Both branches of the evaluation agree near the switch point.
  EXPECT_NEAR(kolmogorov_survival(1.1799999), kolmogorov_survival(1.1800001), 1e-6);
  EXPECT_EQ(kolmogorov_survival(0.0), 1.0);
}

TEST(Ks, ExactQuantilesGiveMinimalStatistic) {
  const int m = 1000;
  std::vector<double> q;
  for (int i = 0; i < m; ++i) {
    // Invert the normal CDF by bisection on the erfc oracle.
    const double p = (i + 0.5) / m;
    double lo = -10.0, hi = 10.0;
    for (int k = 0; k < 200; ++k) {
      const double mid = 0.5 * (lo + hi);
      (oracle::phi(mid) < p ? lo : hi) = mid;
    }
    q.push_back(0.5 * (lo + hi));
  }
  std::reverse(q.begin(), q.end());
  EXPECT_LE(ks_normal_test(q).statistic, 0.5 / m + 1e-12);
}

TEST(Ks, LevelAndPower) {
  int accepted = 0;
  int rejected = 0;
  for (std::uint64_t t = 0; t < 100; ++t) {
    Rng rng = make_rng(derive_seed(60, 0, t));
    std::normal_distribution<double> normal;
    std::vector<double> null_sample;
    std::vector<double> shifted;
    for (int i = 0; i < 200; ++i) {
      null_sample.push_back(normal(rng));
      shifted.push_back(1.0 + normal(rng));
    }
    if (ks_normal_test(null_sample).p_value > 0.05) ++accepted;
    if (ks_normal_test(shifted).p_value < 0.05) ++rejected;
  }
  EXPECT_GE(accepted, 90);
  EXPECT_GE(rejected, 99);
}

TEST(Ks, DegenerateSample) {
  EXPECT_LT(ks_normal_test(std::vector<double>(200, 0.3)).p_value, 1e-6);
  EXPECT_THROW(ks_normal_test(std::vector<double>(19, 0.0)), std::exception);
}

TEST(Kde, IntegratesToOne) {
  Rng rng = make_rng(61);
  std::normal_distribution<double> normal(2.0, 3.0);
  std::vector<double> xs;
  for (int i = 0; i < 200; ++i) xs.push_back(normal(rng));
  const DensityGrid g = kernel_density(xs);
  ASSERT_EQ(g.x.size(), 512u);
  double area = 0.0;
  for (std::size_t i = 1; i < g.x.size(); ++i) area += 0.5 * (g.x[i] - g.x[i - 1]) * (g.density[i] + g.density[i - 1]);
  EXPECT_NEAR(area, 1.0, 0.01);
  // Silverman's rule of thumb, 0.9 min(sd, IQR / 1.34) m^{-1/5}, with sd close to 3.
  EXPECT_NEAR(g.bandwidth, 0.9 * 3.0 * std::pow(200.0, -0.2), 0.15);
}

TEST(Quantiles, FiveNumber) {
  const FiveNumber f = five_number({5, 1, 4, 2, 3});
  EXPECT_EQ(f.min, 1.0);
  EXPECT_EQ(f.q1, 2.0);
  EXPECT_EQ(f.median, 3.0);
  EXPECT_EQ(f.q3, 4.0);
  EXPECT_EQ(f.max, 5.0);
  EXPECT_DOUBLE_EQ(quantile({0, 10}, 0.25), 2.5);
}
