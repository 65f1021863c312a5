#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

// Small numeric helpers shared by the statistics, detector and
// reconstruction code. Everything here is pure and allocation-free.

namespace pnsim {

/// Exact binomial coefficient as a double. n is small everywhere in this
/// library (truncations are capped at 40), so the multiplicative form stays
/// inside the integer-exact range of a double.
inline double choose(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  if (k > n - k) k = n - k;
  double c = 1.0;
  for (int i = 1; i <= k; ++i) c = c * static_cast<double>(n - k + i) / static_cast<double>(i);
  return c;
}

/// P(X = k) for X ~ Binomial(n, p).
inline double binomial_pmf(int k, int n, double p) {
  if (k < 0 || k > n) return 0.0;
  if (p <= 0.0) return k == 0 ? 1.0 : 0.0;
  if (p >= 1.0) return k == n ? 1.0 : 0.0;
  return choose(n, k) * std::pow(p, k) * std::pow(1.0 - p, n - k);
}

/// P(X = k) for X ~ Poisson(mean). mean == 0 is the point mass at zero.
inline double poisson_pmf(int k, double mean) {
  if (k < 0) return 0.0;
  if (mean < 0.0) throw std::invalid_argument("poisson_pmf: negative mean");
  if (mean == 0.0) return k == 0 ? 1.0 : 0.0;
  return std::exp(-mean + k * std::log(mean) - std::lgamma(static_cast<double>(k) + 1.0));
}

/// P(X > n) for X ~ Poisson(mean), summed upward so small tails keep full
/// relative precision instead of cancelling against 1.
inline double poisson_tail_above(int n, double mean) {
  if (mean < 0.0) throw std::invalid_argument("poisson_tail_above: negative mean");
  if (mean == 0.0) return 0.0;
  if (n < 0) return 1.0;
  double term = poisson_pmf(n + 1, mean);
  double tail = 0.0;
  for (int k = n + 1; k < n + 4000; ++k) {
    tail += term;
    term *= mean / static_cast<double>(k + 1);
    if (term < tail * 1e-18 + 1e-300) break;
  }
  return tail;
}

inline double normal_pdf(double z) {
  static constexpr double inv_sqrt_2pi = 0.3989422804014327;
  return inv_sqrt_2pi * std::exp(-0.5 * z * z);
}

/// Standard normal CDF.
inline double normal_cdf(double z) { return 0.5 * std::erfc(-z * 0.7071067811865476); }

/// Mass of a unit-area Gaussian(center, sigma) inside [lo, hi).
inline double gaussian_bin_mass(double lo, double hi, double center, double sigma) {
  return normal_cdf((hi - center) / sigma) - normal_cdf((lo - center) / sigma);
}

inline double clamp01(double x) { return x < 0.0 ? 0.0 : (x > 1.0 ? 1.0 : x); }

}  // namespace pnsim
