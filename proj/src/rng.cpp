#include "lqn/rng.hpp"

#include <limits>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace lqn {

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t state = seed;
  std::uint64_t a = splitmix64(state);
  state = a ^ index;
  return splitmix64(state);
}

RandomStream::RandomStream(std::uint64_t seed) : eng_(seed) {}

double RandomStream::uniform() {
  return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
}

double RandomStream::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform();
}

double RandomStream::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  // Box-Muller; 1 - uniform() lies in (0, 1] so the log argument is nonzero.
  double u1 = 1.0 - uniform();
  double u2 = uniform();
  double radius = std::sqrt(-2.0 * std::log(u1));
  double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  have_spare_ = true;
  return radius * std::cos(angle);
}

Complex RandomStream::cnormal() {
  double re = normal();
  double im = normal();
  return Complex(re, im) / std::sqrt(2.0);
}

long long RandomStream::poisson(double mean) {
  if (!(mean >= 0.0)) {
    throw std::invalid_argument("poisson: mean must be non-negative");
  }
  if (mean == 0.0) {
    return 0;
  }
  if (mean < 30.0) {
    double limit = std::exp(-mean);
    double product = 1.0;
    long long count = -1;
    do {
      ++count;
      product *= uniform();
    } while (product > limit);
    return count;
  }
  double approx = std::round(mean + std::sqrt(mean) * normal());
  return approx < 0.0 ? 0 : static_cast<long long>(approx);
}

std::uint64_t RandomStream::uniform_int(std::uint64_t bound) {
  if (bound == 0) {
    throw std::invalid_argument("uniform_int: bound must be positive");
  }
  // Rejection sampling for an unbiased result.
  std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                        std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t draw;
  do {
    draw = eng_();
  } while (draw >= limit);
  return draw % bound;
}

}  // namespace lqn
