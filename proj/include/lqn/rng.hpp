#pragma once

#include <complex>
#include <cstdint>
#include <random>

namespace lqn {

using Complex = std::complex<double>;

// SplitMix64 mixing step; used both as a tiny PRNG and as a seed-derivation
// hash so that per-trial streams are independent of execution order.
std::uint64_t splitmix64(std::uint64_t& state);

// Derive a child seed from (seed, index). Deterministic and collision-resistant
// enough for Monte Carlo stream separation.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

// Deterministic random stream with explicitly pinned conversions so results
// are identical across platforms and standard libraries.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed);

  // Uniform in [0, 1), 53-bit resolution.
  double uniform();
  // Uniform in [lo, hi).
  double uniform(double lo, double hi);
  // Standard normal via Box-Muller (explicit, not std::normal_distribution).
  double normal();
  // Standard complex normal: unit total variance (re/im each variance 1/2).
  Complex cnormal();
  // Poisson sample; Knuth product method below mean 30, rounded clamped
  // normal approximation above (adequate for shot-noise simulation).
  long long poisson(double mean);
  // Uniform integer in [0, bound), bound >= 1.
  std::uint64_t uniform_int(std::uint64_t bound);

 private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace lqn
