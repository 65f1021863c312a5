#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "pnsim/distribution.hpp"
#include "pnsim/histogram.hpp"
#include "pnsim/math.hpp"

// Least-squares decomposition of a pulse-height histogram into a sum of
// Gaussian peaks. The model integrates each Gaussian over the bin, so the
// fitted "area" is directly in count units. Levenberg-Marquardt with an
// analytic Jacobian; centers free by default, optionally constrained to an
// equally spaced comb.

namespace pnsim {

struct GaussianPeak {
  double center = 0.0;
  double sigma = 1.0;
  double area = 0.0;
};

struct FitOptions {
  int max_iterations = 500;
  double rel_tol = 1e-8;       // convergence: relative residual-norm change
  bool shared_spacing = false;  // centers forced to base + k * spacing
};

struct PeakFit {
  std::vector<GaussianPeak> peaks;  // sorted by center
  double residual_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  bool degenerate = false;
  std::string message;
};

namespace fitdetail {

/// Dense symmetric positive-definite solve via Cholesky. Returns false if the
/// matrix is not positive definite (the caller then raises the damping).
inline bool cholesky_solve(std::vector<double>& a, std::vector<double>& b, int n) {
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = a[static_cast<std::size_t>(i) * n + j];
      for (int k = 0; k < j; ++k)
        s -= a[static_cast<std::size_t>(i) * n + k] * a[static_cast<std::size_t>(j) * n + k];
      if (i == j) {
        if (!(s > 0.0)) return false;
        a[static_cast<std::size_t>(i) * n + j] = std::sqrt(s);
      } else {
        a[static_cast<std::size_t>(i) * n + j] = s / a[static_cast<std::size_t>(j) * n + j];
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    double s = b[static_cast<std::size_t>(i)];
    for (int k = 0; k < i; ++k) s -= a[static_cast<std::size_t>(i) * n + k] * b[static_cast<std::size_t>(k)];
    b[static_cast<std::size_t>(i)] = s / a[static_cast<std::size_t>(i) * n + i];
  }
  for (int i = n - 1; i >= 0; --i) {
    double s = b[static_cast<std::size_t>(i)];
    for (int k = i + 1; k < n; ++k) s -= a[static_cast<std::size_t>(k) * n + i] * b[static_cast<std::size_t>(k)];
    b[static_cast<std::size_t>(i)] = s / a[static_cast<std::size_t>(i) * n + i];
  }
  return true;
}

struct Params {
  // Free mode: centers/sigmas/areas all independent. Shared mode: centers
  // are base + k * spacing.
  bool shared = false;
  int npeaks = 0;
  double base = 0.0;
  double spacing = 0.0;
  std::vector<double> center;
  std::vector<double> sigma;
  std::vector<double> area;

  double center_of(int k) const { return shared ? base + k * spacing : center[static_cast<std::size_t>(k)]; }

  int dof() const { return shared ? 2 + 2 * npeaks : 3 * npeaks; }
};

inline double ssr_of(const Params& p, const Histogram& h) {
  double ssr = 0.0;
  for (int b = 0; b < h.size(); ++b) {
    double model = 0.0;
    for (int k = 0; k < p.npeaks; ++k)
      model += p.area[static_cast<std::size_t>(k)] *
               gaussian_bin_mass(h.bin_low(b), h.bin_high(b), p.center_of(k), p.sigma[static_cast<std::size_t>(k)]);
    const double r = static_cast<double>(h.count(b)) - model;
    ssr += r * r;
  }
  return ssr;
}

}  // namespace fitdetail

/// Fits n_peaks Gaussians to the histogram. Initial centers sit at
/// k * gain_hint for k = 0..n_peaks-1 (the zero-electron pedestal is peak 0),
/// sigmas at gain_hint/4 and areas at the local mass near each center.
/// Non-convergence is reported in the result, not thrown; an empty histogram
/// is an error.
inline PeakFit fit_peaks(const Histogram& h, int n_peaks, double gain_hint,
                         const FitOptions& opt = {}) {
  if (n_peaks < 1) throw std::invalid_argument("fit_peaks: need at least one peak");
  if (n_peaks > 12) throw std::invalid_argument("fit_peaks: more than 12 peaks unsupported");
  if (!(gain_hint > 0.0)) throw std::invalid_argument("fit_peaks: gain hint must be > 0");
  if (h.total() == 0) throw std::invalid_argument("fit_peaks: empty histogram");

  using fitdetail::Params;
  Params p;
  p.shared = opt.shared_spacing;
  p.npeaks = n_peaks;
  p.base = 0.0;
  p.spacing = gain_hint;
  p.center.resize(static_cast<std::size_t>(n_peaks));
  p.sigma.assign(static_cast<std::size_t>(n_peaks), gain_hint / 4.0);
  p.area.resize(static_cast<std::size_t>(n_peaks));
  for (int k = 0; k < n_peaks; ++k) {
    const double c = k * gain_hint;
    p.center[static_cast<std::size_t>(k)] = c;
    double mass = 0.0;
    for (int b = 0; b < h.size(); ++b)
      if (h.bin_center(b) >= c - gain_hint / 2.0 && h.bin_center(b) < c + gain_hint / 2.0)
        mass += static_cast<double>(h.count(b));
    p.area[static_cast<std::size_t>(k)] = std::max(mass, 1e-9);
  }

  const double sigma_min = h.width() / 10.0;
  const int nbins = h.size();
  const int dof = p.dof();
  std::vector<double> jac(static_cast<std::size_t>(nbins) * static_cast<std::size_t>(dof));
  std::vector<double> resid(static_cast<std::size_t>(nbins));

  double ssr = fitdetail::ssr_of(p, h);
  double lambda = 1e-3;
  int iterations = 0;
  bool converged = false;

  while (iterations < opt.max_iterations && !converged) {
    ++iterations;

    // Residuals and Jacobian at the current point.
    for (int b = 0; b < nbins; ++b) {
      const double lo = h.bin_low(b);
      const double hi = h.bin_high(b);
      double model = 0.0;
      double d_base = 0.0;
      double d_spacing = 0.0;
      for (int k = 0; k < n_peaks; ++k) {
        const double c = p.center_of(k);
        const double s = p.sigma[static_cast<std::size_t>(k)];
        const double a = p.area[static_cast<std::size_t>(k)];
        const double zlo = (lo - c) / s;
        const double zhi = (hi - c) / s;
        const double mass = normal_cdf(zhi) - normal_cdf(zlo);
        model += a * mass;
        const double dc = a * (normal_pdf(zlo) - normal_pdf(zhi)) / s;
        const double ds = a * (zlo * normal_pdf(zlo) - zhi * normal_pdf(zhi)) / s;
        if (p.shared) {
          d_base += dc;
          d_spacing += k * dc;
          jac[static_cast<std::size_t>(b) * dof + 2 + static_cast<std::size_t>(k)] = ds;
          jac[static_cast<std::size_t>(b) * dof + 2 + n_peaks + static_cast<std::size_t>(k)] = mass;
        } else {
          jac[static_cast<std::size_t>(b) * dof + 3 * static_cast<std::size_t>(k) + 0] = dc;
          jac[static_cast<std::size_t>(b) * dof + 3 * static_cast<std::size_t>(k) + 1] = ds;
          jac[static_cast<std::size_t>(b) * dof + 3 * static_cast<std::size_t>(k) + 2] = mass;
        }
      }
      if (p.shared) {
        jac[static_cast<std::size_t>(b) * dof + 0] = d_base;
        jac[static_cast<std::size_t>(b) * dof + 1] = d_spacing;
      }
      resid[static_cast<std::size_t>(b)] = static_cast<double>(h.count(b)) - model;
    }

    std::vector<double> jtj(static_cast<std::size_t>(dof) * static_cast<std::size_t>(dof), 0.0);
    std::vector<double> jtr(static_cast<std::size_t>(dof), 0.0);
    for (int b = 0; b < nbins; ++b) {
      for (int i = 0; i < dof; ++i) {
        const double ji = jac[static_cast<std::size_t>(b) * dof + i];
        if (ji == 0.0) continue;
        jtr[static_cast<std::size_t>(i)] += ji * resid[static_cast<std::size_t>(b)];
        for (int j = 0; j <= i; ++j)
          jtj[static_cast<std::size_t>(i) * dof + j] += ji * jac[static_cast<std::size_t>(b) * dof + j];
      }
    }
    for (int i = 0; i < dof; ++i)
      for (int j = i + 1; j < dof; ++j)
        jtj[static_cast<std::size_t>(i) * dof + j] = jtj[static_cast<std::size_t>(j) * dof + i];

    // Damped step, retried with stronger damping until it improves the fit.
    bool stepped = false;
    for (int attempt = 0; attempt < 40 && !stepped; ++attempt) {
      std::vector<double> a = jtj;
      std::vector<double> rhs = jtr;
      for (int i = 0; i < dof; ++i) {
        const double d = jtj[static_cast<std::size_t>(i) * dof + i];
        a[static_cast<std::size_t>(i) * dof + i] = d + lambda * std::max(d, 1e-12);
      }
      if (fitdetail::cholesky_solve(a, rhs, dof)) {
        Params trial = p;
        if (p.shared) {
          trial.base += rhs[0];
          trial.spacing += rhs[1];
          for (int k = 0; k < n_peaks; ++k) {
            trial.sigma[static_cast<std::size_t>(k)] += rhs[static_cast<std::size_t>(2 + k)];
            trial.area[static_cast<std::size_t>(k)] += rhs[static_cast<std::size_t>(2 + n_peaks + k)];
          }
        } else {
          for (int k = 0; k < n_peaks; ++k) {
            trial.center[static_cast<std::size_t>(k)] += rhs[static_cast<std::size_t>(3 * k + 0)];
            trial.sigma[static_cast<std::size_t>(k)] += rhs[static_cast<std::size_t>(3 * k + 1)];
            trial.area[static_cast<std::size_t>(k)] += rhs[static_cast<std::size_t>(3 * k + 2)];
          }
        }
        bool feasible = true;
        for (int k = 0; k < n_peaks && feasible; ++k)
          feasible = trial.sigma[static_cast<std::size_t>(k)] >= sigma_min &&
                     trial.area[static_cast<std::size_t>(k)] >= 0.0;
        if (feasible) {
          const double trial_ssr = fitdetail::ssr_of(trial, h);
          if (trial_ssr <= ssr) {
            const double old_norm = std::sqrt(ssr);
            const double new_norm = std::sqrt(trial_ssr);
            if (old_norm - new_norm <= opt.rel_tol * std::max(old_norm, 1e-300)) converged = true;
            p = trial;
            ssr = trial_ssr;
            lambda = std::max(lambda * 0.35, 1e-12);
            stepped = true;
          }
        }
      }
      if (!stepped) lambda *= 4.0;
    }
    if (!stepped) break;  // damping exhausted; report as non-converged
  }

  PeakFit out;
  out.peaks.resize(static_cast<std::size_t>(n_peaks));
  for (int k = 0; k < n_peaks; ++k)
    out.peaks[static_cast<std::size_t>(k)] =
        GaussianPeak{p.center_of(k), p.sigma[static_cast<std::size_t>(k)], p.area[static_cast<std::size_t>(k)]};
  std::sort(out.peaks.begin(), out.peaks.end(),
            [](const GaussianPeak& a, const GaussianPeak& b) { return a.center < b.center; });
  out.residual_norm = std::sqrt(ssr);
  out.iterations = iterations;
  out.converged = converged;
  for (std::size_t k = 0; k + 1 < out.peaks.size(); ++k) {
    const double spacing = out.peaks[k + 1].center - out.peaks[k].center;
    if (spacing < 0.5 * std::max(out.peaks[k].sigma, out.peaks[k + 1].sigma)) {
      out.degenerate = true;
      out.message = "peaks " + std::to_string(k) + " and " + std::to_string(k + 1) +
                    " overlap: spacing " + std::to_string(spacing) + " below half their width";
    }
  }
  if (!out.converged && out.message.empty())
    out.message = "did not converge after " + std::to_string(out.iterations) +
                  " iterations; residual norm " + std::to_string(out.residual_norm);
  return out;
}

/// Peak areas normalized into a detected-count distribution; index follows
/// the center ordering, so entry 0 is the pedestal. Input peak order does
/// not matter.
inline PhotonNumberDistribution detected_distribution(const PeakFit& fit) {
  std::vector<GaussianPeak> peaks = fit.peaks;
  std::sort(peaks.begin(), peaks.end(),
            [](const GaussianPeak& a, const GaussianPeak& b) { return a.center < b.center; });
  double total = 0.0;
  for (const auto& pk : peaks) total += pk.area;
  if (!(total > 0.0)) throw std::invalid_argument("detected_distribution: total fitted area is zero");
  PhotonNumberDistribution d;
  d.probs.reserve(peaks.size());
  for (const auto& pk : peaks) d.probs.push_back(pk.area / total);
  return d;
}

}  // namespace pnsim
