#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "pnsim/distribution.hpp"
#include "pnsim/math.hpp"
#include "pnsim/rng.hpp"

// Pair-emission statistics of the pulsed down-conversion source. Two models:
// Poisson for a pump pulse spanning many temporal modes (the default), and
// the single-mode thermal law for comparison.

namespace pnsim {

enum class SourceKind { poisson, thermal };

struct SourceModel {
  SourceKind kind = SourceKind::poisson;
  double mean_pairs = 0.0;

  void validate() const {
    if (!(mean_pairs >= 0.0) || !std::isfinite(mean_pairs))
      throw std::invalid_argument("SourceModel: mean_pairs must be finite and >= 0");
  }
};

/// Linear pump-power calibration: mean pairs per pulse = slope * power.
struct PumpCalibration {
  double slope = 0.0;  // mean pairs per microwatt
  double power = 0.0;  // microwatts

  double mean_pairs() const {
    if (!(slope > 0.0) || !std::isfinite(slope))
      throw std::invalid_argument("PumpCalibration: slope must be finite and > 0");
    if (!(power >= 0.0) || !std::isfinite(power))
      throw std::invalid_argument("PumpCalibration: power must be finite and >= 0");
    return slope * power;
  }
};

/// P(n pairs in one pulse).
inline double pair_pmf(const SourceModel& src, int n) {
  if (n < 0) throw std::invalid_argument("pair_pmf: negative n");
  src.validate();
  const double mu = src.mean_pairs;
  switch (src.kind) {
    case SourceKind::poisson:
      return poisson_pmf(n, mu);
    case SourceKind::thermal:
      if (mu == 0.0) return n == 0 ? 1.0 : 0.0;
      return std::pow(mu, n) / std::pow(1.0 + mu, n + 1);
  }
  throw std::logic_error("pair_pmf: unknown source kind");
}

/// P(pair count > n).
inline double pair_tail_mass(const SourceModel& src, int n) {
  src.validate();
  const double mu = src.mean_pairs;
  switch (src.kind) {
    case SourceKind::poisson:
      return poisson_tail_above(n, mu);
    case SourceKind::thermal:
      if (mu == 0.0) return 0.0;
      return std::pow(mu / (1.0 + mu), n + 1);
  }
  throw std::logic_error("pair_tail_mass: unknown source kind");
}

/// Smallest truncation N with tail mass below tol, capped at kMaxTruncation.
/// Throws if even the cap cannot contain the tail.
inline int auto_truncation(const SourceModel& src, double tol = 1e-12,
                           int cap = kMaxTruncation) {
  for (int n = 0; n <= cap; ++n) {
    if (pair_tail_mass(src, n) < tol) return n;
  }
  throw std::invalid_argument("auto_truncation: tail mass " +
                              std::to_string(pair_tail_mass(src, cap)) + " beyond N=" +
                              std::to_string(cap) + " exceeds tolerance");
}

/// Truncated pair-number distribution (entries are the exact pmf values, not
/// renormalized; the discarded tail must be below 1e-12).
inline PhotonNumberDistribution pair_distribution(const SourceModel& src, int truncation) {
  if (truncation < 0) throw std::invalid_argument("pair_distribution: negative truncation");
  const double tail = pair_tail_mass(src, truncation);
  if (!(tail < 1e-12))
    throw std::invalid_argument("pair_distribution: truncated tail mass " +
                                std::to_string(tail) + " at N=" + std::to_string(truncation));
  PhotonNumberDistribution d;
  d.probs.resize(static_cast<std::size_t>(truncation) + 1);
  for (int n = 0; n <= truncation; ++n) d.probs[static_cast<std::size_t>(n)] = pair_pmf(src, n);
  return d;
}

/// One pulse worth of pairs.
inline int sample_pair_count(const SourceModel& src, RngStream& rng) {
  src.validate();
  const double mu = src.mean_pairs;
  switch (src.kind) {
    case SourceKind::poisson:
      return sample_poisson(rng, mu);
    case SourceKind::thermal: {
      if (mu == 0.0) return 0;
      // Geometric with success probability 1/(1+mu): invert the CDF.
      const double log_ratio = std::log(mu / (1.0 + mu));
      return static_cast<int>(std::floor(std::log(rng.uniform_open()) / log_ratio));
    }
  }
  throw std::logic_error("sample_pair_count: unknown source kind");
}

}  // namespace pnsim
