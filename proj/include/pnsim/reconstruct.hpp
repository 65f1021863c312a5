#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "pnsim/distribution.hpp"
#include "pnsim/loss_model.hpp"

// Recovery of the photon-number distribution from a detected-count
// distribution. The direct route inverts the dark convolution and the loss
// matrix by exact triangular solves; with noisy input it can go negative,
// which is reported as-is. The constrained route solves the same least
// squares problem restricted to the probability simplex.

namespace pnsim {

/// Direct (signed) inversion: solve D y = f, then L p = y. Exact for
/// noiseless input; entries may be negative for noisy input.
inline PhotonNumberDistribution invert_counts(const PhotonNumberDistribution& f, double eta,
                                              double dark_mean, int truncation) {
  if (truncation < 0) throw std::invalid_argument("invert_counts: negative truncation");
  if (truncation > kMaxTruncation)
    throw std::invalid_argument("invert_counts: truncation exceeds cap " +
                                std::to_string(kMaxTruncation));
  require_finite(f, "invert_counts input");
  std::vector<double> fv = f.probs;
  fv.resize(static_cast<std::size_t>(truncation) + 1, 0.0);

  const LossMatrix D = dark_matrix(dark_mean, truncation);
  const LossMatrix L = loss_matrix(eta, truncation);
  PhotonNumberDistribution p;
  p.probs = L.solve(D.solve(fv));
  require_finite(p, "invert_counts output");
  return p;
}

/// Euclidean projection onto the probability simplex.
inline std::vector<double> project_simplex(std::vector<double> v) {
  std::vector<double> u = v;
  std::sort(u.begin(), u.end(), std::greater<double>());
  double cum = 0.0;
  double tau = 0.0;
  int rho = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    cum += u[i];
    const double t = (cum - 1.0) / static_cast<double>(i + 1);
    if (u[i] - t > 0.0) {
      rho = static_cast<int>(i + 1);
      tau = t;
    }
  }
  if (rho == 0) throw std::logic_error("project_simplex: empty support");
  for (auto& x : v) x = std::max(x - tau, 0.0);
  return v;
}

struct ConstrainedOptions {
  int max_iterations = 100000;
  double objective_tol = 1e-12;  // stop when the objective changes less than this
};

/// Constrained reconstruction: minimize ||D L p - f||^2 subject to p >= 0 and
/// sum(p) = 1, by accelerated projected gradient steps. Throws if the
/// objective has not settled within the iteration budget.
inline PhotonNumberDistribution invert_counts_constrained(const PhotonNumberDistribution& f,
                                                          double eta, double dark_mean,
                                                          int truncation,
                                                          const ConstrainedOptions& opt = {}) {
  if (truncation < 0) throw std::invalid_argument("invert_counts_constrained: negative truncation");
  if (truncation > kMaxTruncation)
    throw std::invalid_argument("invert_counts_constrained: truncation exceeds cap " +
                                std::to_string(kMaxTruncation));
  require_finite(f, "invert_counts_constrained input");
  const int n = truncation + 1;
  std::vector<double> fv = f.probs;
  fv.resize(static_cast<std::size_t>(n), 0.0);

  const LossMatrix A = compose(dark_matrix(dark_mean, truncation), loss_matrix(eta, truncation));

  auto apply_at = [&](const std::vector<double>& x) {  // A^T x
    std::vector<double> y(static_cast<std::size_t>(n), 0.0);
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += A.at(i, j) * x[static_cast<std::size_t>(i)];
      y[static_cast<std::size_t>(j)] = s;
    }
    return y;
  };

  // Lipschitz constant of the gradient via power iteration on A^T A.
  std::vector<double> v(static_cast<std::size_t>(n), 1.0 / std::sqrt(static_cast<double>(n)));
  double lam = 1.0;
  for (int it = 0; it < 60; ++it) {
    std::vector<double> w = apply_at(A.apply(v));
    double norm = 0.0;
    for (double x : w) norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0.0) break;
    lam = norm;
    for (auto& x : w) x /= norm;
    v = std::move(w);
  }
  const double step = 1.0 / (2.0 * lam * 1.05);

  auto objective = [&](const std::vector<double>& x) {
    const std::vector<double> ax = A.apply(x);
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
      const double r = ax[static_cast<std::size_t>(i)] - fv[static_cast<std::size_t>(i)];
      s += r * r;
    }
    return s;
  };

  // Start from the signed solution projected onto the simplex.
  std::vector<double> x;
  try {
    x = project_simplex(loss_matrix(eta, truncation).solve(dark_matrix(dark_mean, truncation).solve(fv)));
  } catch (const std::exception&) {
    x.assign(static_cast<std::size_t>(n), 1.0 / static_cast<double>(n));
  }
  std::vector<double> y = x;
  std::vector<double> x_prev = x;
  double obj = objective(x);
  double t = 1.0;

  for (int it = 1; it <= opt.max_iterations; ++it) {
    const std::vector<double> ay = A.apply(y);
    std::vector<double> grad_in(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
      grad_in[static_cast<std::size_t>(i)] = ay[static_cast<std::size_t>(i)] - fv[static_cast<std::size_t>(i)];
    const std::vector<double> grad = apply_at(grad_in);
    std::vector<double> z(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
      z[static_cast<std::size_t>(i)] = y[static_cast<std::size_t>(i)] - 2.0 * step * grad[static_cast<std::size_t>(i)];
    std::vector<double> x_next = project_simplex(std::move(z));
    const double obj_next = objective(x_next);

    if (obj_next > obj) {
      // Momentum overshot; restart from the last accepted point.
      y = x;
      t = 1.0;
      if (obj_next - obj < opt.objective_tol) return PhotonNumberDistribution{x};
      continue;
    }

    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const double beta = (t - 1.0) / t_next;
    x_prev = x;
    x = x_next;
    for (int i = 0; i < n; ++i)
      y[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(i)] +
                                       beta * (x[static_cast<std::size_t>(i)] - x_prev[static_cast<std::size_t>(i)]);
    t = t_next;
    const double delta = obj - obj_next;
    obj = obj_next;
    if (delta < opt.objective_tol) return PhotonNumberDistribution{x};
  }
  throw std::runtime_error("invert_counts_constrained: no convergence within " +
                           std::to_string(opt.max_iterations) + " iterations");
}

/// Infinity-norm condition number of the composed detection matrix D * L.
/// The inverse is assembled column-by-column through the two exact
/// triangular solves. Grows steeply with truncation once eta < 1.
inline double condition_report(double eta, double dark_mean, int truncation) {
  if (truncation < 0) throw std::invalid_argument("condition_report: negative truncation");
  if (truncation > kMaxTruncation)
    throw std::invalid_argument("condition_report: truncation exceeds cap " +
                                std::to_string(kMaxTruncation));
  const LossMatrix D = dark_matrix(dark_mean, truncation);
  const LossMatrix L = loss_matrix(eta, truncation);
  const LossMatrix M = compose(D, L);
  const int n = M.dim();

  // Row sums of |M^-1|, accumulated from its columns.
  std::vector<double> inv_row_sums(static_cast<std::size_t>(n), 0.0);
  std::vector<double> e(static_cast<std::size_t>(n), 0.0);
  for (int k = 0; k < n; ++k) {
    std::fill(e.begin(), e.end(), 0.0);
    e[static_cast<std::size_t>(k)] = 1.0;
    const std::vector<double> col = L.solve(D.solve(e));
    for (int i = 0; i < n; ++i) inv_row_sums[static_cast<std::size_t>(i)] += std::abs(col[static_cast<std::size_t>(i)]);
  }
  const double inv_norm = *std::max_element(inv_row_sums.begin(), inv_row_sums.end());
  return infinity_norm(M) * inv_norm;
}

}  // namespace pnsim
