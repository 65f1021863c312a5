#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

#include "pnsim/rng.hpp"

// Stochastic model of one photon counter: binomial quantum efficiency,
// Poisson dark counts per pulse window, multiplication gain with excess
// noise, and an optional geometric saturation effect where a photon landing
// on the dead spot left by an earlier avalanche in the same pulse is lost.

namespace pnsim {

struct DeadSpotGeometry {
  double active_diameter = 1000.0;  // microns
  double spot_diameter = 5.0;       // microns
  double beam_sigma = 0.0;          // microns, per-axis Gaussian beam spread

  void validate() const {
    if (!(active_diameter > 0.0)) throw std::invalid_argument("DeadSpotGeometry: active_diameter must be > 0");
    if (!(spot_diameter > 0.0)) throw std::invalid_argument("DeadSpotGeometry: spot_diameter must be > 0");
    if (!(spot_diameter < active_diameter))
      throw std::invalid_argument("DeadSpotGeometry: spot_diameter must be smaller than active_diameter");
    if (!(beam_sigma > 0.0)) throw std::invalid_argument("DeadSpotGeometry: beam_sigma must be > 0");
  }
};

struct DetectorConfig {
  double efficiency = 0.58;       // quantum efficiency, (0, 1]
  double dark_mean = 0.01;        // mean dark counts per pulse window
  double gain = 1.0;              // multiplication gain G; heights are in units of G
  double excess_noise = 1.03;     // F = <M^2>/<M>^2 of the multiplication
  double baseline_sigma = 0.15;   // electronic baseline noise, same units as gain
  std::optional<DeadSpotGeometry> deadspot;  // absent = saturation off

  void validate() const {
    if (!(efficiency >= 0.0 && efficiency <= 1.0))
      throw std::invalid_argument("DetectorConfig: efficiency must be in [0, 1]");
    if (!(dark_mean >= 0.0) || !std::isfinite(dark_mean))
      throw std::invalid_argument("DetectorConfig: dark_mean must be finite and >= 0");
    if (!(gain > 0.0)) throw std::invalid_argument("DetectorConfig: gain must be > 0");
    if (!(excess_noise >= 1.0))
      throw std::invalid_argument("DetectorConfig: excess_noise must be >= 1");
    if (!(baseline_sigma >= 0.0))
      throw std::invalid_argument("DetectorConfig: baseline_sigma must be >= 0");
    if (deadspot) deadspot->validate();
  }

  /// Width of the k-electron pulse-height peak:
  /// sigma_k^2 = baseline^2 + k (F - 1) G^2.
  double peak_sigma(int k) const {
    return std::sqrt(baseline_sigma * baseline_sigma +
                     k * (excess_noise - 1.0) * gain * gain);
  }
};

/// Analog pulse height (or integrated pulse area; same model either way).
struct PulseHeight {
  double value = 0.0;
  auto operator<=>(const PulseHeight&) const = default;
};

/// Binomial thinning: each of n_true photons survives with probability eta.
inline int apply_loss(int n_true, double eta, RngStream& rng) {
  if (n_true < 0) throw std::invalid_argument("apply_loss: negative photon count");
  if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument("apply_loss: eta outside [0, 1]");
  return sample_binomial(rng, n_true, eta);
}

/// Adds Poisson(dark_mean) spurious counts.
inline int add_dark(int k, double dark_mean, RngStream& rng) {
  if (k < 0) throw std::invalid_argument("add_dark: negative count");
  return k + sample_poisson(rng, dark_mean);
}

/// Places k avalanches as Gaussian(beam_sigma) positions; an avalanche within
/// spot_diameter of any earlier surviving one is discarded. k <= 1 never
/// loses anything.
inline int deadspot_thinning(int k, const DeadSpotGeometry& geom, RngStream& rng) {
  if (k < 0) throw std::invalid_argument("deadspot_thinning: negative count");
  geom.validate();
  if (k <= 1) return k;
  const double d2 = geom.spot_diameter * geom.spot_diameter;
  double xs[64];
  double ys[64];
  int kept = 0;
  for (int i = 0; i < k; ++i) {
    const double x = geom.beam_sigma * rng.gaussian();
    const double y = geom.beam_sigma * rng.gaussian();
    bool lost = false;
    for (int j = 0; j < kept; ++j) {
      const double dx = x - xs[j];
      const double dy = y - ys[j];
      if (dx * dx + dy * dy < d2) {
        lost = true;
        break;
      }
    }
    if (!lost) {
      if (kept < 64) {
        xs[kept] = x;
        ys[kept] = y;
        ++kept;
      } else {
        throw std::invalid_argument("deadspot_thinning: more than 64 avalanches per pulse");
      }
    }
  }
  return kept;
}

/// Analog height of a k-electron pulse: Gaussian with mean k*G and variance
/// baseline^2 + k (F - 1) G^2 (independent per-electron gain fluctuations).
/// Zero variance yields the mean exactly.
inline PulseHeight pulse_height(int k, const DetectorConfig& cfg, RngStream& rng) {
  if (k < 0) throw std::invalid_argument("pulse_height: negative count");
  cfg.validate();
  const double sigma = cfg.peak_sigma(k);
  const double mean = k * cfg.gain;
  if (sigma == 0.0) return PulseHeight{mean};
  return PulseHeight{mean + sigma * rng.gaussian()};
}

/// Full per-pulse detection chain: loss, darks, optional saturation.
inline int detect_count(int n_true, const DetectorConfig& cfg, RngStream& rng) {
  int k = apply_loss(n_true, cfg.efficiency, rng);
  k = add_dark(k, cfg.dark_mean, rng);
  if (cfg.deadspot) k = deadspot_thinning(k, *cfg.deadspot, rng);
  return k;
}

}  // namespace pnsim
