#include "pnsim/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

// Statistical tolerances below are 5 standard errors of the estimator in
// question, computed from closed-form moments:
//   uniform mean SE        = sqrt(1/12/n)
//   gaussian mean SE       = 1/sqrt(n), variance SE ~ sqrt(2/n)
//   Poisson(mu) svar SE    = sqrt((mu + 2 mu^2)/n)
//   binomial mean SE       = sqrt(n_trials p q / n)

namespace {

using namespace pnsim;

TEST(Rng, SameSeedSameSequence) {
  RngStream a(42, 7);
  RngStream b(42, 7);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a(), b());
}

TEST(Rng, CopyContinuesIdentically) {
  RngStream a(9, 1);
  for (int i = 0; i < 17; ++i) a();
  RngStream b = a;
  for (int i = 0; i < 100; ++i) ASSERT_EQ(a(), b());
}

TEST(Rng, DifferentStreamsDiffer) {
  RngStream a(42, 0);
  RngStream b(42, 1);
  int same = 0;
  for (int i = 0; i < 64; ++i) same += a() == b() ? 1 : 0;
  EXPECT_LT(same, 2);
}

TEST(Rng, DeriveSeedSpreadsStreams) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 4096; ++s) seen.insert(derive_seed(1, s));
  EXPECT_EQ(seen.size(), 4096u);
  EXPECT_NE(derive_seed(1, 0), derive_seed(2, 0));
  EXPECT_EQ(derive_seed(5, 3), derive_seed(5, 3));
}

TEST(Rng, UniformRangeAndMean) {
  RngStream rng(1);
  const int n = 200000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / n, 0.5, 5.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST(Rng, UniformOpenNeverZero) {
  RngStream rng(3);
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform_open();
    ASSERT_GT(u, 0.0);
    ASSERT_LE(u, 1.0);
  }
}

TEST(Rng, GaussianMoments) {
  RngStream rng(7);
  const int n = 200000;
  double s1 = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double g = rng.gaussian();
    s1 += g;
    s2 += g * g;
  }
  const double mean = s1 / n;
  const double var = s2 / n - mean * mean;
  EXPECT_NEAR(mean, 0.0, 5.0 / std::sqrt(static_cast<double>(n)));
  EXPECT_NEAR(var, 1.0, 5.0 * std::sqrt(2.0 / n));
}

TEST(Rng, GaussianTailFraction) {
  // P(|Z| > 1.96) = 0.05; SE = sqrt(.05*.95/n).
  RngStream rng(11);
  const int n = 200000;
  int tail = 0;
  for (int i = 0; i < n; ++i) tail += std::abs(rng.gaussian()) > 1.96 ? 1 : 0;
  EXPECT_NEAR(static_cast<double>(tail) / n, 0.05, 5.0 * std::sqrt(0.05 * 0.95 / n));
}

TEST(Rng, PoissonSamplerMoments) {
  RngStream rng(5);
  const double mu = 3.0;
  const int n = 200000;
  double s1 = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const int k = sample_poisson(rng, mu);
    ASSERT_GE(k, 0);
    s1 += k;
    s2 += static_cast<double>(k) * k;
  }
  const double mean = s1 / n;
  const double svar = s2 / n - mean * mean;
  EXPECT_NEAR(mean, mu, 5.0 * std::sqrt(mu / n));
  EXPECT_NEAR(svar, mu, 5.0 * std::sqrt((mu + 2.0 * mu * mu) / n));
}

TEST(Rng, PoissonSamplerEdges) {
  RngStream rng(1);
  EXPECT_EQ(sample_poisson(rng, 0.0), 0);
  EXPECT_THROW(sample_poisson(rng, -1.0), std::invalid_argument);
  EXPECT_THROW(sample_poisson(rng, 501.0), std::invalid_argument);
}

TEST(Rng, BinomialSamplerMoments) {
  RngStream rng(13);
  const int trials = 10;
  const double p = 0.3;
  const int n = 200000;
  double s1 = 0.0;
  for (int i = 0; i < n; ++i) {
    const int k = sample_binomial(rng, trials, p);
    ASSERT_GE(k, 0);
    ASSERT_LE(k, trials);
    s1 += k;
  }
  EXPECT_NEAR(s1 / n, trials * p, 5.0 * std::sqrt(trials * p * (1 - p) / n));
}

TEST(Rng, BinomialSamplerEdges) {
  RngStream rng(1);
  EXPECT_EQ(sample_binomial(rng, 0, 0.5), 0);
  EXPECT_EQ(sample_binomial(rng, 5, 0.0), 0);
  EXPECT_EQ(sample_binomial(rng, 5, 1.0), 5);
  EXPECT_THROW(sample_binomial(rng, -1, 0.5), std::invalid_argument);
}

TEST(Rng, BinomialCouplingMonotoneInP) {
  // The sampler consumes one uniform per trial, so running two copies of the
  // same stream at p_low < p_high gives k_low <= k_high pathwise. Detection
  // chains rely on this to compare efficiencies on common randomness.
  RngStream base(17);
  for (int rep = 0; rep < 2000; ++rep) {
    RngStream lo = base;
    RngStream hi = base;
    const int a = sample_binomial(lo, 8, 0.35);
    const int b = sample_binomial(hi, 8, 0.75);
    ASSERT_LE(a, b);
    base = lo;  // advance the base stream by the consumed draws
  }
}

}  // namespace
