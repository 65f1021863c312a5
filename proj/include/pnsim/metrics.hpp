#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "pnsim/experiment.hpp"
#include "pnsim/loss_model.hpp"
#include "pnsim/math.hpp"
#include "pnsim/reconstruct.hpp"
#include "pnsim/source.hpp"

// Figures of merit: coincidence-based efficiency estimates, the analytic
// conditional distribution behind a trigger outcome, heralded-state fidelity
// and generation rate, and the pump-power sweep that ties them together.

namespace pnsim {

struct KlyshkoEstimate {
  double eta1 = 0.0;  // trigger-arm efficiency, coincidences / singles_2
  double eta2 = 0.0;  // idler-arm efficiency, coincidences / singles_1
};

/// Klyshko efficiencies: each arm's efficiency is estimated from the fraction
/// of the other arm's singles that arrive in coincidence.
inline KlyshkoEstimate klyshko_efficiency(const CoincidenceCounts& c) {
  if (c.singles_1 == 0 || c.singles_2 == 0)
    throw std::invalid_argument("klyshko_efficiency: zero singles in one arm");
  return KlyshkoEstimate{static_cast<double>(c.coincidences) / static_cast<double>(c.singles_2),
                         static_cast<double>(c.coincidences) / static_cast<double>(c.singles_1)};
}

/// Dark-corrected variant: expected accidental coincidences and dark-only
/// singles are subtracted before forming the ratios (leading-order
/// correction; see the raw estimate for the uncorrected values).
inline KlyshkoEstimate klyshko_dark_corrected(const CoincidenceCounts& c, double d1, double d2) {
  if (!(d1 >= 0.0) || !(d2 >= 0.0))
    throw std::invalid_argument("klyshko_dark_corrected: negative dark mean");
  const double pulses = static_cast<double>(c.pulses);
  const double fire1 = -std::expm1(-d1);  // P(dark-only pulse fires arm 1)
  const double fire2 = -std::expm1(-d2);
  const double coinc = static_cast<double>(c.coincidences) - pulses * fire1 * fire2;
  const double s1 = static_cast<double>(c.singles_1) - pulses * fire1;
  const double s2 = static_cast<double>(c.singles_2) - pulses * fire2;
  if (!(s1 > 0.0) || !(s2 > 0.0))
    throw std::invalid_argument("klyshko_dark_corrected: dark correction exhausts the singles");
  return KlyshkoEstimate{coinc / s2, coinc / s1};
}

/// Conditional distribution of the true pair number given that a
/// number-resolved trigger detected m counts:
///   P(n | m) proportional to p_n * sum_k Binom(k; n, eta1) Poisson(m - k; d1).
inline PhotonNumberDistribution posterior_oracle(const SourceModel& src,
                                                 const DetectorConfig& trigger, int m,
                                                 int truncation) {
  if (m < 0) throw std::invalid_argument("posterior_oracle: negative detected count");
  if (truncation < 0 || truncation > kMaxTruncation)
    throw std::invalid_argument("posterior_oracle: truncation outside [0, " +
                                std::to_string(kMaxTruncation) + "]");
  trigger.validate();
  PhotonNumberDistribution post;
  post.probs.assign(static_cast<std::size_t>(truncation) + 1, 0.0);
  double total = 0.0;
  for (int n = 0; n <= truncation; ++n) {
    double like = 0.0;
    for (int k = 0; k <= std::min(n, m); ++k)
      like += binomial_pmf(k, n, trigger.efficiency) * poisson_pmf(m - k, trigger.dark_mean);
    const double w = pair_pmf(src, n) * like;
    post.probs[static_cast<std::size_t>(n)] = w;
    total += w;
  }
  if (!(total > 0.0))
    throw std::invalid_argument("posterior_oracle: conditioning event has zero probability");
  for (auto& p : post.probs) p /= total;
  return post;
}

/// Probability mass the reconstruction assigns to exactly n photons. Raw
/// value: a signed reconstruction can make it negative; clamp for reporting
/// with clamp01.
inline double heralded_fidelity(const PhotonNumberDistribution& p, int n) {
  if (n < 0) throw std::invalid_argument("heralded_fidelity: negative n");
  return p.at(n);
}

/// Trigger-label rate in Hz.
inline double generation_rate(std::uint64_t label_count, std::uint64_t pulses,
                              double rep_rate_hz) {
  if (pulses == 0) throw std::invalid_argument("generation_rate: zero pulses");
  if (!(rep_rate_hz > 0.0)) throw std::invalid_argument("generation_rate: rep rate must be > 0");
  return rep_rate_hz * static_cast<double>(label_count) / static_cast<double>(pulses);
}

/// Analytic detected-count distribution of one arm: D * L * p with the
/// source truncated automatically.
inline std::vector<double> detected_count_distribution(const SourceModel& src,
                                                       const DetectorConfig& det, int kmax) {
  const int n_src = auto_truncation(src);
  const int truncation = std::max(n_src, kmax);
  const PhotonNumberDistribution p = pair_distribution(src, truncation);
  std::vector<double> f = forward_detected(p.probs, det.efficiency == 0.0 ? 1e-300 : det.efficiency,
                                           det.dark_mean);
  // efficiency == 0 never occurs in validated configs; guard keeps the matrix invertible.
  f.resize(static_cast<std::size_t>(kmax) + 1, 0.0);
  return f;
}

/// Analytic P(trigger label == n) for a Poisson or thermal source, either
/// classification mode. Pulse-height mode folds the detected-count
/// distribution with the Gaussian window acceptance of each peak.
inline double label_probability(const SourceModel& src, const DetectorConfig& trigger,
                                const ScaWindows& windows, TriggerClassification mode, int label) {
  if (trigger.deadspot)
    throw std::invalid_argument("label_probability: no closed form with saturation enabled");
  const int kmax = std::min(kMaxTruncation, auto_truncation(src) + 8);
  const std::vector<double> f = detected_count_distribution(src, trigger, kmax);
  if (mode == TriggerClassification::detected_count) {
    if (label < 1 || label > windows.max_label()) return 0.0;
    return label <= kmax ? f[static_cast<std::size_t>(label)] : 0.0;
  }
  const ScaWindow* win = nullptr;
  for (const auto& w : windows.windows())
    if (w.label == label) win = &w;
  if (win == nullptr) return 0.0;
  double prob = 0.0;
  for (int k = 0; k <= kmax; ++k) {
    const double sigma = trigger.peak_sigma(k);
    const double mean = k * trigger.gain;
    double acc;
    if (sigma == 0.0)
      acc = (mean >= win->low && mean < win->high) ? 1.0 : 0.0;
    else
      acc = gaussian_bin_mass(win->low, win->high, mean, sigma);
    prob += f[static_cast<std::size_t>(k)] * acc;
  }
  return prob;
}

/// Finds the pump slope such that P(trigger label 1) hits the target at the
/// anchor power, taking the lower-power root (the operating branch below the
/// rate rollover). Bisection on the analytic label probability.
inline double calibrate_slope(const SourceModel& kind_template, const DetectorConfig& trigger,
                              const ScaWindows& windows, TriggerClassification mode,
                              double target_label1_probability, double anchor_power) {
  if (!(target_label1_probability > 0.0 && target_label1_probability < 1.0))
    throw std::invalid_argument("calibrate_slope: target probability outside (0, 1)");
  if (!(anchor_power > 0.0)) throw std::invalid_argument("calibrate_slope: anchor power must be > 0");

  auto p1 = [&](double mu) {
    SourceModel s = kind_template;
    s.mean_pairs = mu;
    return label_probability(s, trigger, windows, mode, 1);
  };

  // Walk up until the probability rolls over, tracking the peak.
  double mu_lo = 0.0;
  double best_mu = 1e-4;
  double best_p = p1(best_mu);
  double mu = 1e-4;
  for (int i = 0; i < 200 && mu < 30.0; ++i) {
    mu *= 1.25;
    const double p = p1(mu);
    if (p > best_p) {
      best_p = p;
      best_mu = mu;
    } else if (p < best_p * 0.8) {
      break;
    }
  }
  if (best_p < target_label1_probability)
    throw std::invalid_argument("calibrate_slope: target probability " +
                                std::to_string(target_label1_probability) +
                                " above achievable maximum " + std::to_string(best_p));
  double hi = best_mu;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (mu_lo + hi);
    if (p1(mid) < target_label1_probability)
      mu_lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (mu_lo + hi) / anchor_power;
}

/// Reconstructs the conditional photon-number distribution behind one
/// trigger label from the conditioned idler detected-count tallies.
inline PhotonNumberDistribution conditional_from_counts(const std::vector<std::uint64_t>& counts,
                                                        const DetectorConfig& monitor,
                                                        bool constrained) {
  std::uint64_t events = 0;
  int kmax = 0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    events += counts[k];
    if (counts[k] > 0) kmax = static_cast<int>(k);
  }
  if (events == 0) throw std::invalid_argument("conditional_from_counts: no events");
  const int truncation = std::min(kMaxTruncation, kmax + 2);
  PhotonNumberDistribution f;
  f.probs.assign(static_cast<std::size_t>(truncation) + 1, 0.0);
  for (int k = 0; k <= std::min(truncation, static_cast<int>(counts.size()) - 1); ++k)
    f.probs[static_cast<std::size_t>(k)] =
        static_cast<double>(counts[static_cast<std::size_t>(k)]) / static_cast<double>(events);
  return constrained
             ? invert_counts_constrained(f, monitor.efficiency, monitor.dark_mean, truncation)
             : invert_counts(f, monitor.efficiency, monitor.dark_mean, truncation);
}

struct SweepEntry {
  double power = 0.0;  // pump power, calibration units
  double mu = 0.0;     // calibrated mean pairs per pulse
  int n = 0;           // trigger label
  std::uint64_t label_events = 0;
  double fidelity_signed = 0.0;
  double fidelity_clamped = 0.0;
  double fidelity_oracle = 0.0;
  double rate_hz = 0.0;
};

struct SweepConfig {
  ExperimentConfig base;        // detectors, windows, classification, rep rate, seed
  std::vector<double> powers;   // pump powers to visit
  std::uint64_t pulses_per_point = 0;
  double slope = 0.0;           // mean pairs per unit power
  int n_max = 4;
  int workers = 1;
};

struct SweepResult {
  std::vector<SweepEntry> entries;
  std::vector<ExperimentSummary> point_summaries;  // one per power
  std::vector<std::uint64_t> point_seeds;
  double slope = 0.0;
};

/// Runs one experiment per pump power and reports, for each trigger label n,
/// the reconstructed heralded fidelity (signed and clamped), the analytic
/// oracle fidelity for an ideal-resolution trigger, and the generation rate.
/// Entries with zero labeled events carry NaN fidelities.
inline SweepResult sweep(const SweepConfig& cfg) {
  if (cfg.powers.empty()) throw std::invalid_argument("sweep: no powers given");
  if (!(cfg.slope > 0.0)) throw std::invalid_argument("sweep: slope must be > 0");
  if (cfg.pulses_per_point == 0) throw std::invalid_argument("sweep: zero pulses per point");
  if (cfg.n_max < 1 || cfg.n_max > cfg.base.windows.max_label())
    throw std::invalid_argument("sweep: n_max outside the window set");

  SweepResult out;
  out.slope = cfg.slope;
  for (std::size_t i = 0; i < cfg.powers.size(); ++i) {
    ExperimentConfig point = cfg.base;
    point.source.mean_pairs = cfg.slope * cfg.powers[i];
    point.num_pulses = cfg.pulses_per_point;
    point.seed = derive_seed(cfg.base.seed, 0x5eed0000ULL + i);
    const ExperimentResult res = run_experiment(point, RunOptions{cfg.workers, false});
    out.point_seeds.push_back(point.seed);

    for (int n = 1; n <= cfg.n_max; ++n) {
      SweepEntry e;
      e.power = cfg.powers[i];
      e.mu = point.source.mean_pairs;
      e.n = n;
      e.label_events = res.summary.label_counts[static_cast<std::size_t>(n)];
      e.rate_hz = generation_rate(e.label_events, res.summary.num_pulses, point.rep_rate_hz);
      const int oracle_trunc = std::min(kMaxTruncation, auto_truncation(point.source) + 4);
      e.fidelity_oracle =
          heralded_fidelity(posterior_oracle(point.source, point.trigger, n, oracle_trunc), n);
      if (e.label_events > 0) {
        const PhotonNumberDistribution rec = conditional_from_counts(
            res.summary.idler_counts_by_label[static_cast<std::size_t>(n)], point.monitor, false);
        e.fidelity_signed = heralded_fidelity(rec, n);
        e.fidelity_clamped = clamp01(e.fidelity_signed);
      } else {
        e.fidelity_signed = std::nan("");
        e.fidelity_clamped = std::nan("");
      }
      out.entries.push_back(e);
    }
    out.point_summaries.push_back(std::move(res.summary));
  }
  return out;
}

}  // namespace pnsim
