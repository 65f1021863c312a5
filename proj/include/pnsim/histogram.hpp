#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace pnsim {

/// Uniform-bin count histogram. Bin geometry is fixed at construction so
/// that partial histograms from different pulse shards merge exactly.
class Histogram {
 public:
  Histogram() : low_(0.0), width_(1.0) {}

  Histogram(double low, double width, int nbins) : low_(low), width_(width) {
    if (!(width > 0.0)) throw std::invalid_argument("Histogram: bin width must be > 0");
    if (nbins <= 0) throw std::invalid_argument("Histogram: need at least one bin");
    counts_.assign(static_cast<std::size_t>(nbins), 0);
  }

  void add(double x) {
    const double pos = (x - low_) / width_;
    if (pos < 0.0) {
      ++underflow_;
      return;
    }
    const auto bin = static_cast<std::size_t>(pos);
    if (bin >= counts_.size()) {
      ++overflow_;
      return;
    }
    ++counts_[bin];
  }

  void merge(const Histogram& other) {
    if (other.low_ != low_ || other.width_ != width_ || other.counts_.size() != counts_.size())
      throw std::invalid_argument("Histogram::merge: incompatible bin geometry");
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
    underflow_ += other.underflow_;
    overflow_ += other.overflow_;
  }

  int size() const { return static_cast<int>(counts_.size()); }
  double low() const { return low_; }
  double width() const { return width_; }
  double bin_low(int i) const { return low_ + i * width_; }
  double bin_high(int i) const { return low_ + (i + 1) * width_; }
  double bin_center(int i) const { return low_ + (i + 0.5) * width_; }
  std::uint64_t count(int i) const { return counts_.at(static_cast<std::size_t>(i)); }
  std::uint64_t underflow() const { return underflow_; }
  std::uint64_t overflow() const { return overflow_; }

  std::uint64_t total() const {
    std::uint64_t t = 0;
    for (auto c : counts_) t += c;
    return t;
  }

  /// Used by the CSV reader, which reconstructs a histogram bin by bin.
  void set_count(int i, std::uint64_t c) { counts_.at(static_cast<std::size_t>(i)) = c; }

 private:
  double low_;
  double width_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t underflow_ = 0;
  std::uint64_t overflow_ = 0;
};

}  // namespace pnsim
