#include "pnsim/math.hpp"

#include <gtest/gtest.h>

#include <cmath>

// Hand-computed reference values, frozen before the implementations:
//   choose(5, 2)            = 10
//   choose(40, 20)          = 137846528820
//   Binom(k; 2, 0.58)       = (0.1764, 0.4872, 0.3364)
//   Poisson(1; 0.01)        = 0.01 e^-0.01   = 0.009900498337491681
//   Poisson(0; 0.1)         = e^-0.1         = 0.9048374180359595
//   Phi(0) = 0.5, Phi(1.96) = 0.9750021048517795

namespace {

using namespace pnsim;

TEST(Math, ChooseExactSmall) {
  EXPECT_DOUBLE_EQ(choose(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(choose(5, 0), 1.0);
  EXPECT_DOUBLE_EQ(choose(5, 2), 10.0);
  EXPECT_DOUBLE_EQ(choose(5, 5), 1.0);
  EXPECT_DOUBLE_EQ(choose(3, 7), 0.0);
  EXPECT_DOUBLE_EQ(choose(3, -1), 0.0);
}

TEST(Math, ChooseExactLarge) {
  // Largest binomial coefficient the truncation cap can ask for; still exact
  // in double precision (137846528820 < 2^53).
  EXPECT_DOUBLE_EQ(choose(40, 20), 137846528820.0);
  EXPECT_DOUBLE_EQ(choose(40, 1), 40.0);
}

TEST(Math, ChooseSymmetry) {
  for (int n = 0; n <= 20; ++n)
    for (int k = 0; k <= n; ++k) EXPECT_DOUBLE_EQ(choose(n, k), choose(n, n - k));
}

TEST(Math, PascalRecurrence) {
  for (int n = 1; n <= 25; ++n)
    for (int k = 1; k <= n; ++k)
      EXPECT_NEAR(choose(n, k), choose(n - 1, k - 1) + choose(n - 1, k), 1e-6 * choose(n, k) + 1e-12);
}

TEST(Math, BinomialPmfValues) {
  EXPECT_NEAR(binomial_pmf(0, 2, 0.58), 0.1764, 1e-15);
  EXPECT_NEAR(binomial_pmf(1, 2, 0.58), 0.4872, 1e-15);
  EXPECT_NEAR(binomial_pmf(2, 2, 0.58), 0.3364, 1e-15);
  EXPECT_DOUBLE_EQ(binomial_pmf(3, 2, 0.58), 0.0);
  EXPECT_DOUBLE_EQ(binomial_pmf(-1, 2, 0.58), 0.0);
}

TEST(Math, BinomialPmfEdgeProbabilities) {
  EXPECT_DOUBLE_EQ(binomial_pmf(0, 5, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(binomial_pmf(2, 5, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(binomial_pmf(5, 5, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(binomial_pmf(4, 5, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(binomial_pmf(0, 0, 0.3), 1.0);
}

TEST(Math, BinomialPmfSumsToOne) {
  for (const double p : {0.1, 0.58, 0.97}) {
    for (const int n : {1, 7, 23}) {
      double s = 0.0;
      for (int k = 0; k <= n; ++k) s += binomial_pmf(k, n, p);
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
  }
}

TEST(Math, PoissonPmfValues) {
  EXPECT_NEAR(poisson_pmf(0, 0.1), 0.9048374180359595, 1e-15);
  EXPECT_NEAR(poisson_pmf(1, 0.01), 0.009900498337491681, 1e-15);
  EXPECT_DOUBLE_EQ(poisson_pmf(0, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(poisson_pmf(3, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(poisson_pmf(-1, 2.0), 0.0);
  EXPECT_THROW(poisson_pmf(0, -0.1), std::invalid_argument);
}

TEST(Math, PoissonPmfSumsToOne) {
  for (const double mean : {0.1, 1.0, 5.0, 20.0}) {
    double s = 0.0;
    for (int k = 0; k <= 200; ++k) s += poisson_pmf(k, mean);
    EXPECT_NEAR(s, 1.0, 1e-12) << "mean " << mean;
  }
}

TEST(Math, PoissonTailMatchesComplement) {
  for (const double mean : {0.01, 0.5, 3.0}) {
    for (const int n : {0, 2, 10}) {
      double head = 0.0;
      for (int k = 0; k <= n; ++k) head += poisson_pmf(k, mean);
      EXPECT_NEAR(poisson_tail_above(n, mean), 1.0 - head, 1e-13) << mean << " " << n;
    }
  }
  EXPECT_DOUBLE_EQ(poisson_tail_above(5, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(poisson_tail_above(-1, 1.0), 1.0);
}

TEST(Math, PoissonTailTinyValuesKeepPrecision) {
  // Far tails must come out as the leading pmf term, not as 1 - 1 = 0.
  const double t = poisson_tail_above(20, 0.1);
  EXPECT_GT(t, 0.0);
  EXPECT_NEAR(t / poisson_pmf(21, 0.1), 1.0, 1e-2);
}

TEST(Math, NormalCdfValues) {
  EXPECT_DOUBLE_EQ(normal_cdf(0.0), 0.5);
  EXPECT_NEAR(normal_cdf(1.96), 0.9750021048517795, 1e-12);
  EXPECT_NEAR(normal_cdf(-1.96), 1.0 - 0.9750021048517795, 1e-12);
  EXPECT_NEAR(normal_cdf(8.0) , 1.0, 1e-15);
}

TEST(Math, NormalPdfIntegratesToCdf) {
  // Trapezoid integration of the pdf against cdf differences.
  const double a = -1.3, b = 0.7;
  const int steps = 20000;
  const double h = (b - a) / steps;
  double integral = 0.0;
  for (int i = 0; i < steps; ++i)
    integral += 0.5 * h * (normal_pdf(a + i * h) + normal_pdf(a + (i + 1) * h));
  EXPECT_NEAR(integral, normal_cdf(b) - normal_cdf(a), 1e-9);
}

TEST(Math, GaussianBinMass) {
  EXPECT_NEAR(gaussian_bin_mass(-1.0, 1.0, 0.0, 1.0), 2.0 * normal_cdf(1.0) - 1.0, 1e-14);
  EXPECT_NEAR(gaussian_bin_mass(0.5, 1.5, 1.0, 0.15), 2.0 * normal_cdf(0.5 / 0.15) - 1.0, 1e-12);
}

TEST(Math, Clamp01) {
  EXPECT_DOUBLE_EQ(clamp01(-0.2), 0.0);
  EXPECT_DOUBLE_EQ(clamp01(0.37), 0.37);
  EXPECT_DOUBLE_EQ(clamp01(1.2), 1.0);
}

}  // namespace
