#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include <doctest.h>

#include "lqn/rng.hpp"

using lqn::RandomStream;

TEST_CASE("derive_seed is deterministic and separates indices") {
  const std::uint64_t a = lqn::derive_seed(42, 0);
  const std::uint64_t b = lqn::derive_seed(42, 1);
  const std::uint64_t c = lqn::derive_seed(43, 0);
  CHECK(a == lqn::derive_seed(42, 0));
  CHECK(a != b);
  CHECK(a != c);

  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 64; ++s) {
    for (std::uint64_t i = 0; i < 64; ++i) {
      seen.insert(lqn::derive_seed(s, i));
    }
  }
  CHECK(seen.size() == 64u * 64u);
}

TEST_CASE("identical seeds give identical streams, different seeds differ") {
  RandomStream a(7), b(7), c(8);
  bool same = true, diff = false;
  for (int i = 0; i < 100; ++i) {
    const double va = a.uniform();
    same = same && (va == b.uniform());
    diff = diff || (va != c.uniform());
  }
  CHECK(same);
  CHECK(diff);
}

TEST_CASE("uniform stays in range and fills the interval") {
  RandomStream rng(1);
  double lo = 1.0, hi = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    lo = std::min(lo, u);
    hi = std::max(hi, u);
  }
  CHECK(lo < 0.01);
  CHECK(hi > 0.99);

  for (int i = 0; i < 1000; ++i) {
    const double u = rng.uniform(-2.0, 3.0);
    CHECK(u >= -2.0);
    CHECK(u < 3.0);
  }
}

TEST_CASE("normal moments match a standard normal") {
  RandomStream rng(2);
  const int n = 200000;
  double sum = 0.0, sum2 = 0.0, sum4 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sum2 += x * x;
    sum4 += x * x * x * x;
  }
  CHECK(std::abs(sum / n) < 0.02);
  CHECK(std::abs(sum2 / n - 1.0) < 0.03);
  CHECK(std::abs(sum4 / n - 3.0) < 0.15);
}

TEST_CASE("cnormal has unit total variance split over re/im") {
  RandomStream rng(3);
  const int n = 100000;
  double re2 = 0.0, im2 = 0.0;
  lqn::Complex mean = 0.0;
  for (int i = 0; i < n; ++i) {
    const lqn::Complex z = rng.cnormal();
    mean += z;
    re2 += z.real() * z.real();
    im2 += z.imag() * z.imag();
  }
  CHECK(std::abs(mean) / n < 0.01);
  CHECK(std::abs(re2 / n - 0.5) < 0.02);
  CHECK(std::abs(im2 / n - 0.5) < 0.02);
}

TEST_CASE("poisson handles edge and bulk regimes") {
  RandomStream rng(4);
  CHECK(rng.poisson(0.0) == 0);

  double sum = 0.0, sum2 = 0.0;
  const int n = 50000;
  for (int i = 0; i < n; ++i) {
    const double x = static_cast<double>(rng.poisson(3.7));
    CHECK(x >= 0.0);
    sum += x;
    sum2 += x * x;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  CHECK(std::abs(mean - 3.7) < 0.05);
  CHECK(std::abs(var - 3.7) < 0.15);

  // Normal-approximation regime.
  sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const long long x = rng.poisson(1e4);
    CHECK(x >= 0);
    sum += static_cast<double>(x);
  }
  CHECK(std::abs(sum / n - 1e4) < 10.0);
}

TEST_CASE("uniform_int covers [0, bound) uniformly") {
  RandomStream rng(5);
  std::vector<int> counts(7, 0);
  const int n = 70000;
  for (int i = 0; i < n; ++i) {
    const std::uint64_t v = rng.uniform_int(7);
    REQUIRE(v < 7);
    ++counts[static_cast<std::size_t>(v)];
  }
  for (int c : counts) {
    CHECK(std::abs(c - n / 7) < 400);
  }
  CHECK(rng.uniform_int(1) == 0);
}
