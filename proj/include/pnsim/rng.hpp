#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

// Deterministic random streams. Results must be reproducible bit for bit
// across platforms and across worker counts, so the generator and every
// sampler built on it are implemented here instead of delegating to the
// implementation-defined std::*_distribution algorithms.

namespace pnsim {

namespace rngdetail {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

inline std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

/// splitmix64 step (Stafford mix13 finalizer). Used only for seeding.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += kGolden);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace rngdetail

/// Mixes a base seed and a stream index into an independent derived seed.
/// Used for per-block pulse streams and per-point sweep seeds.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t s = seed ^ rngdetail::rotl(stream * 0xD1B54A32D192ED03ULL, 31);
  return rngdetail::splitmix64(s);
}

/// xoshiro256** (Blackman & Vigna). Cheap to construct, which matters because
/// the experiment harness seeds one stream per pulse block.
class RngStream {
 public:
  using result_type = std::uint64_t;

  explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0) {
    std::uint64_t s = derive_seed(seed, stream);
    bool all_zero = true;
    for (auto& w : s_) {
      w = rngdetail::splitmix64(s);
      all_zero = all_zero && w == 0;
    }
    if (all_zero) s_[0] = rngdetail::kGolden;  // xoshiro forbids the zero state
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()() {
    const std::uint64_t result = rngdetail::rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rngdetail::rotl(s_[3], 45);
    return result;
  }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform double in (0, 1]; safe as a log() argument.
  double uniform_open() { return static_cast<double>(((*this)() >> 11) + 1) * 0x1.0p-53; }

  /// Standard normal via Box-Muller. One draw consumes two uniforms; no state
  /// is cached so the consumption pattern stays predictable.
  double gaussian() {
    const double u1 = uniform_open();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

 private:
  std::uint64_t s_[4];
};

/// Poisson sample by Knuth's product method. Exact, and fast for the small
/// means used here (pair yields and dark counts; mean is validated upstream
/// to stay far below the underflow limit of exp(-mean)).
inline int sample_poisson(RngStream& rng, double mean) {
  if (mean < 0.0) throw std::invalid_argument("sample_poisson: negative mean");
  if (mean == 0.0) return 0;
  if (mean > 500.0) throw std::invalid_argument("sample_poisson: mean too large");
  const double limit = std::exp(-mean);
  int k = 0;
  double prod = rng.uniform();
  while (prod > limit) {
    ++k;
    prod *= rng.uniform();
  }
  return k;
}

/// Binomial sample as n Bernoulli trials against a shared uniform stream.
/// The trial form makes thinning monotone in p for a fixed seed, a property
/// the detector tests exploit.
inline int sample_binomial(RngStream& rng, int n, double p) {
  if (n < 0) throw std::invalid_argument("sample_binomial: negative n");
  if (p <= 0.0) return 0;
  if (p >= 1.0) return n;
  int k = 0;
  for (int i = 0; i < n; ++i) k += rng.uniform() < p ? 1 : 0;
  return k;
}

}  // namespace pnsim
