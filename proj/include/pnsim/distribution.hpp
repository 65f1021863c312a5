#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace pnsim {

/// Hard cap on photon-number truncation. Inversions beyond this are
/// ill-conditioned enough to be meaningless and are rejected outright.
inline constexpr int kMaxTruncation = 40;

/// Default tolerance for "sums to one" checks on distributions.
inline constexpr double kNormalizationTol = 1e-9;

/// Probabilities indexed by photon number 0..truncation. Signed variants
/// (direct inversions of noisy data) may carry negative entries but still
/// sum to one; helpers below distinguish the two cases.
struct PhotonNumberDistribution {
  std::vector<double> probs;

  int truncation() const { return static_cast<int>(probs.size()) - 1; }

  /// Entry n, zero outside the stored range.
  double at(int n) const {
    return (n >= 0 && n < static_cast<int>(probs.size())) ? probs[static_cast<std::size_t>(n)]
                                                          : 0.0;
  }

  double sum() const {
    double s = 0.0;
    for (double p : probs) s += p;
    return s;
  }

  double mean() const {
    double m = 0.0;
    for (std::size_t n = 0; n < probs.size(); ++n) m += static_cast<double>(n) * probs[n];
    return m;
  }

  double variance() const {
    const double m = mean();
    double v = 0.0;
    for (std::size_t n = 0; n < probs.size(); ++n) {
      const double d = static_cast<double>(n) - m;
      v += d * d * probs[n];
    }
    return v;
  }

  bool nonnegative() const {
    for (double p : probs)
      if (p < 0.0) return false;
    return true;
  }

  static PhotonNumberDistribution point_mass(int n, int truncation) {
    if (n < 0 || truncation < n) throw std::invalid_argument("point_mass: n outside truncation");
    PhotonNumberDistribution d;
    d.probs.assign(static_cast<std::size_t>(truncation) + 1, 0.0);
    d.probs[static_cast<std::size_t>(n)] = 1.0;
    return d;
  }
};

inline void require_finite(const PhotonNumberDistribution& d, const std::string& what) {
  for (double p : d.probs)
    if (!std::isfinite(p)) throw std::invalid_argument(what + ": non-finite entry");
}

inline void require_normalized(const PhotonNumberDistribution& d, const std::string& what,
                               double tol = kNormalizationTol) {
  require_finite(d, what);
  if (std::abs(d.sum() - 1.0) > tol)
    throw std::invalid_argument(what + ": probabilities sum to " + std::to_string(d.sum()));
}

}  // namespace pnsim
