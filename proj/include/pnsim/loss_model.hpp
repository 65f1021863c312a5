#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "pnsim/distribution.hpp"
#include "pnsim/math.hpp"

// Linear detection model on truncated photon-number space. Binomial loss is
// upper triangular (detected i <= true j), dark convolution is lower
// triangular (detected i >= produced k), so the composed forward map
// f = D * L * p inverts by two exact triangular solves.

namespace pnsim {

enum class TransferKind { binomial, dark, composed };

class LossMatrix {
 public:
  LossMatrix(int truncation, TransferKind kind)
      : truncation_(truncation), kind_(kind),
        a_(static_cast<std::size_t>(truncation + 1) * static_cast<std::size_t>(truncation + 1),
           0.0) {
    if (truncation < 0) throw std::invalid_argument("LossMatrix: negative truncation");
    if (truncation > kMaxTruncation)
      throw std::invalid_argument("LossMatrix: truncation " + std::to_string(truncation) +
                                  " exceeds cap " + std::to_string(kMaxTruncation));
  }

  int truncation() const { return truncation_; }
  int dim() const { return truncation_ + 1; }
  TransferKind kind() const { return kind_; }

  double& at(int i, int j) { return a_[idx(i, j)]; }
  double at(int i, int j) const { return a_[idx(i, j)]; }

  std::vector<double> apply(const std::vector<double>& x) const {
    if (static_cast<int>(x.size()) != dim())
      throw std::invalid_argument("LossMatrix::apply: size mismatch");
    std::vector<double> y(x.size(), 0.0);
    for (int i = 0; i < dim(); ++i) {
      double s = 0.0;
      for (int j = 0; j < dim(); ++j) s += at(i, j) * x[static_cast<std::size_t>(j)];
      y[static_cast<std::size_t>(i)] = s;
    }
    return y;
  }

  /// Solves A x = y exactly by substitution. Only triangular kinds support
  /// this; a composed matrix is inverted through its factors instead.
  std::vector<double> solve(const std::vector<double>& y) const {
    if (static_cast<int>(y.size()) != dim())
      throw std::invalid_argument("LossMatrix::solve: size mismatch");
    std::vector<double> x(y.size(), 0.0);
    const int n = dim();
    switch (kind_) {
      case TransferKind::binomial:  // upper triangular: back substitution
        for (int i = n - 1; i >= 0; --i) {
          double s = y[static_cast<std::size_t>(i)];
          for (int j = i + 1; j < n; ++j) s -= at(i, j) * x[static_cast<std::size_t>(j)];
          x[static_cast<std::size_t>(i)] = s / at(i, i);
        }
        return x;
      case TransferKind::dark:  // lower triangular: forward substitution
        for (int i = 0; i < n; ++i) {
          double s = y[static_cast<std::size_t>(i)];
          for (int j = 0; j < i; ++j) s -= at(i, j) * x[static_cast<std::size_t>(j)];
          x[static_cast<std::size_t>(i)] = s / at(i, i);
        }
        return x;
      case TransferKind::composed:
        throw std::invalid_argument("LossMatrix::solve: composed matrix, solve the factors");
    }
    throw std::logic_error("LossMatrix::solve: unknown kind");
  }

 private:
  std::size_t idx(int i, int j) const {
    if (i < 0 || j < 0 || i > truncation_ || j > truncation_)
      throw std::out_of_range("LossMatrix: index outside matrix");
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(truncation_ + 1) +
           static_cast<std::size_t>(j);
  }

  int truncation_;
  TransferKind kind_;
  std::vector<double> a_;
};

/// L[i][j] = C(j, i) eta^i (1-eta)^(j-i): probability of detecting i photons
/// out of j produced. Columns sum to one. eta = 0 is rejected because the
/// matrix exists to be inverted.
inline LossMatrix loss_matrix(double eta, int truncation) {
  if (!(eta > 0.0 && eta <= 1.0))
    throw std::invalid_argument("loss_matrix: eta must be in (0, 1], got " + std::to_string(eta));
  LossMatrix m(truncation, TransferKind::binomial);
  for (int j = 0; j <= truncation; ++j)
    for (int i = 0; i <= j; ++i) m.at(i, j) = binomial_pmf(i, j, eta);
  return m;
}

/// D[i][k] = Poisson(i - k; d): probability that dark counts lift k detected
/// photons to i. Column sums fall short of one only by the truncated Poisson
/// tail.
inline LossMatrix dark_matrix(double dark_mean, int truncation) {
  if (!(dark_mean >= 0.0) || !std::isfinite(dark_mean))
    throw std::invalid_argument("dark_matrix: dark mean must be finite and >= 0");
  LossMatrix m(truncation, TransferKind::dark);
  for (int k = 0; k <= truncation; ++k)
    for (int i = k; i <= truncation; ++i) m.at(i, k) = poisson_pmf(i - k, dark_mean);
  return m;
}

/// Dense product outer * inner.
inline LossMatrix compose(const LossMatrix& outer, const LossMatrix& inner) {
  if (outer.truncation() != inner.truncation())
    throw std::invalid_argument("compose: truncation mismatch");
  LossMatrix m(outer.truncation(), TransferKind::composed);
  const int n = m.dim();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int k = 0; k < n; ++k) s += outer.at(i, k) * inner.at(k, j);
      m.at(i, j) = s;
    }
  return m;
}

/// Detected-count distribution D * L * p for the given channel.
inline std::vector<double> forward_detected(const std::vector<double>& p, double eta,
                                            double dark_mean) {
  const int truncation = static_cast<int>(p.size()) - 1;
  const LossMatrix L = loss_matrix(eta, truncation);
  const LossMatrix D = dark_matrix(dark_mean, truncation);
  return D.apply(L.apply(p));
}

inline double infinity_norm(const LossMatrix& m) {
  double best = 0.0;
  for (int i = 0; i < m.dim(); ++i) {
    double row = 0.0;
    for (int j = 0; j < m.dim(); ++j) row += std::abs(m.at(i, j));
    best = row > best ? row : best;
  }
  return best;
}

}  // namespace pnsim
