#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <doctest.h>

#include "lqn/photonics.hpp"
#include "lqn/rng.hpp"
#include "lqn/shaping.hpp"

using lqn::CMatrix;
using lqn::Complex;
using lqn::TwoPhotonDistribution;
using lqn::TwoPhotonInput;

namespace {

constexpr double kPi = 3.14159265358979323846;

CMatrix hadamard2() {
  CMatrix h(2, 2);
  h << 1.0, 1.0, 1.0, -1.0;
  return h / std::sqrt(2.0);
}

// Independent second-quantized expansion over unordered configurations.
std::map<std::pair<int, int>, double> expand_two_photon(const CMatrix& M,
                                                        bool indistinguishable) {
  const int k = static_cast<int>(M.rows());
  std::map<std::pair<int, int>, double> probs;
  if (indistinguishable) {
    std::map<std::pair<int, int>, Complex> amps;
    for (int i = 0; i < k; ++i) {
      for (int j = 0; j < k; ++j) {
        const auto key = std::minmax(i, j);
        amps[{key.first, key.second}] += M(i, 0) * M(j, 1);
      }
    }
    for (const auto& [key, amp] : amps) {
      const double fock = key.first == key.second ? std::sqrt(2.0) : 1.0;
      probs[key] = std::norm(fock * amp);
    }
  } else {
    for (int i = 0; i < k; ++i) {
      for (int j = 0; j < k; ++j) {
        const auto key = std::minmax(i, j);
        probs[{key.first, key.second}] += std::norm(M(i, 0)) * std::norm(M(j, 1));
      }
    }
  }
  return probs;
}

}  // namespace

TEST_CASE("reference interferometers match their closed forms") {
  const CMatrix f = lqn::fourier4();
  REQUIRE(f.rows() == 4);
  for (int c = 0; c < 4; ++c) {
    CHECK(std::abs(f(0, c) - Complex(0.5, 0.0)) < 1e-15);
  }
  CHECK(std::abs(f(1, 1) - Complex(0.0, 0.5)) < 1e-15);
  CHECK(std::abs(f(1, 2) - Complex(-0.5, 0.0)) < 1e-15);
  CHECK((f.adjoint() * f - CMatrix::Identity(4, 4)).cwiseAbs().maxCoeff() <
        1e-12);

  const CMatrix s = lqn::sylvester4();
  double max_imag = 0.0;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      max_imag = std::max(max_imag, std::abs(s(i, j).imag()));
      CHECK(std::abs(std::abs(s(i, j).real()) - 0.5) < 1e-15);
    }
  }
  CHECK(max_imag == 0.0);
  CHECK(std::abs(s(3, 1) - Complex(-0.5, 0.0)) < 1e-15);
  CHECK((s.adjoint() * s - CMatrix::Identity(4, 4)).cwiseAbs().maxCoeff() <
        1e-12);

  const CMatrix n = lqn::nonunitary4();
  CHECK((n - n.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(std::abs(n(0, 0) - Complex(0.25, 0.0)) < 1e-15);
  CHECK(std::abs(n(0, 1) - Complex(-0.25, 0.0)) < 1e-15);
  Eigen::JacobiSVD<CMatrix> svd(n);
  CHECK(svd.singularValues()(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(svd.singularValues()(1) < 1e-14);  // rank one
  const CMatrix scaled = lqn::nonunitary4(0.1);
  CHECK(std::abs(scaled(0, 0) - Complex(0.1, 0.0)) < 1e-15);
}

TEST_CASE("columns_pair and family_of enumerate input pairs") {
  const CMatrix f = lqn::fourier4();
  const CMatrix pair = lqn::columns_pair(f, 0, 2);
  CHECK(pair.cols() == 2);
  CHECK((pair.col(0) - f.col(0)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((pair.col(1) - f.col(2)).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(lqn::columns_pair(f, 1, 1), std::invalid_argument);
  CHECK_THROWS_AS(lqn::columns_pair(f, 0, 4), std::invalid_argument);

  const lqn::NetworkFamily fam = lqn::family_of(f);
  REQUIRE(fam.networks.size() == 6);
  const std::vector<std::pair<int, int>> expected = {
      {0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
  CHECK(fam.input_pairs == expected);
}

TEST_CASE("temporal overlap model x(delta)") {
  const TwoPhotonInput at_zero = TwoPhotonInput::from_delay(0, 1, 0.0, 1.5e-12);
  CHECK(at_zero.x == doctest::Approx(1.0).epsilon(1e-15));
  // Half-overlap at half the FWHM: this pins the dip width to the
  // configured value.
  const TwoPhotonInput at_half =
      TwoPhotonInput::from_delay(0, 1, 0.75e-12, 1.5e-12);
  CHECK(at_half.x == doctest::Approx(0.5).epsilon(1e-12));
  const TwoPhotonInput far = TwoPhotonInput::from_delay(0, 1, 2e-11, 1.5e-12);
  CHECK(far.x < 1e-6);

  CHECK_THROWS_AS(TwoPhotonInput::from_delay(0, 1, 0.0, 0.0),
                  std::invalid_argument);
  TwoPhotonInput bad;
  bad.p = bad.q = 1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  TwoPhotonInput out_of_range;
  out_of_range.x = 1.2;
  CHECK_THROWS_AS(out_of_range.validate(), std::invalid_argument);
}

TEST_CASE("canonical HOM on a balanced splitter") {
  const CMatrix h = hadamard2();
  TwoPhotonInput indist;
  const TwoPhotonDistribution bunched = lqn::two_photon_distribution(h, indist);
  CHECK(bunched.prob(0, 1) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(bunched.prob(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(bunched.prob(1, 1) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(bunched.total == doctest::Approx(1.0).epsilon(1e-12));

  TwoPhotonInput dist;
  dist.x = 0.0;
  const TwoPhotonDistribution classical = lqn::two_photon_distribution(h, dist);
  CHECK(classical.prob(0, 1) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(classical.prob(0, 0) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(classical.prob(1, 1) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("two-photon engine matches the second-quantized expansion") {
  lqn::RandomStream rng(41);
  for (int trial = 0; trial < 25; ++trial) {
    const int k = 2 + trial % 5;
    CMatrix M(k, 2);
    for (int i = 0; i < k; ++i)
      for (int c = 0; c < 2; ++c) M(i, c) = rng.cnormal();
    Eigen::JacobiSVD<CMatrix> svd(M);
    M *= 0.9 / svd.singularValues()(0);

    for (bool indist : {true, false}) {
      TwoPhotonInput input;
      input.x = indist ? 1.0 : 0.0;
      const TwoPhotonDistribution d = lqn::two_photon_distribution(M, input);
      for (const auto& [key, p] : expand_two_photon(M, indist)) {
        CHECK(d.prob(key.first, key.second) ==
              doctest::Approx(p).epsilon(1e-12));
      }
      double sum = 0.0;
      for (double p : d.probs) {
        CHECK(p >= 0.0);
        sum += p;
      }
      CHECK(d.total == doctest::Approx(sum).epsilon(1e-12));
      CHECK(d.total <= 1.0 + 1e-9);
    }

    // Intermediate x is exactly the convex mixture.
    TwoPhotonInput mixed;
    mixed.x = 0.37;
    TwoPhotonInput one;
    TwoPhotonInput zero;
    zero.x = 0.0;
    const TwoPhotonDistribution dm = lqn::two_photon_distribution(M, mixed);
    const TwoPhotonDistribution d1 = lqn::two_photon_distribution(M, one);
    const TwoPhotonDistribution d0 = lqn::two_photon_distribution(M, zero);
    for (std::size_t c = 0; c < dm.probs.size(); ++c) {
      CHECK(dm.probs[c] ==
            doctest::Approx(0.37 * d1.probs[c] + 0.63 * d0.probs[c])
                .epsilon(1e-14));
    }
  }
}

TEST_CASE("unitary networks conserve total probability at every x") {
  for (double x : {0.0, 0.33, 1.0}) {
    TwoPhotonInput input;
    input.x = x;
    for (const CMatrix& net : {lqn::fourier4(), lqn::sylvester4()}) {
      for (int p = 0; p < 4; ++p) {
        for (int q = p + 1; q < 4; ++q) {
          const TwoPhotonDistribution d = lqn::two_photon_distribution(
              lqn::columns_pair(net, p, q), input);
          CHECK(d.total == doctest::Approx(1.0).epsilon(1e-9));
        }
      }
    }
  }
}

TEST_CASE("unphysical networks are rejected") {
  CMatrix gain = 1.1 * CMatrix::Identity(2, 2);
  CHECK_THROWS_AS(lqn::two_photon_distribution(gain, TwoPhotonInput{}),
                  std::invalid_argument);
  CMatrix bad(2, 2);
  bad << 1.0, 0.0, 0.0, std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(lqn::two_photon_distribution(bad, TwoPhotonInput{}),
                  std::invalid_argument);
  CMatrix three(2, 3);
  three.setZero();
  CHECK_THROWS_AS(lqn::two_photon_distribution(three, TwoPhotonInput{}),
                  std::invalid_argument);
  // Just-physical passes.
  CMatrix edge = CMatrix::Identity(2, 2);
  CHECK_NOTHROW(lqn::two_photon_distribution(edge, TwoPhotonInput{}));
}

TEST_CASE("configuration indexing round-trips") {
  const int k = 4;
  const auto configs = TwoPhotonDistribution::configs(k);
  REQUIRE(static_cast<int>(configs.size()) ==
          TwoPhotonDistribution::config_count(k));
  for (std::size_t idx = 0; idx < configs.size(); ++idx) {
    const auto [i, j] = configs[idx];
    CHECK(TwoPhotonDistribution::config_index(k, i, j) ==
          static_cast<int>(idx));
  }
  // Symmetric lookup.
  TwoPhotonInput input;
  const TwoPhotonDistribution d =
      lqn::two_photon_distribution(lqn::columns_pair(lqn::fourier4(), 0, 1),
                                   input);
  CHECK(d.prob(2, 1) == d.prob(1, 2));
}

TEST_CASE("nonunitary network shows full anti-coalescence") {
  const lqn::VisibilityPattern pattern =
      lqn::visibility_pattern(lqn::family_of(lqn::nonunitary4()));
  int defined = 0;
  for (int r = 0; r < pattern.v.rows(); ++r) {
    for (int c = 0; c < pattern.v.cols(); ++c) {
      if (pattern.defined(r, c)) {
        ++defined;
        CHECK(pattern.v(r, c) == doctest::Approx(-1.0).epsilon(1e-12));
      }
    }
  }
  CHECK(defined > 0);
}

TEST_CASE("ideal visibility patterns: bounds and suppression structure") {
  const lqn::VisibilityPattern fp =
      lqn::visibility_pattern(lqn::family_of(lqn::fourier4()));
  bool has_one = false, has_zero = false;
  for (int r = 0; r < fp.v.rows(); ++r) {
    for (int c = 0; c < fp.v.cols(); ++c) {
      if (!fp.defined(r, c)) continue;
      CHECK(fp.v(r, c) <= 1.0 + 1e-12);
      if (std::abs(fp.v(r, c) - 1.0) < 1e-9) has_one = true;
      if (std::abs(fp.v(r, c)) < 1e-9) has_zero = true;
    }
  }
  CHECK(has_one);   // suppressed configurations
  CHECK(has_zero);  // non-interfering configurations

  // Sylvester: every defined visibility is exactly +1 or -1.
  const lqn::VisibilityPattern sp =
      lqn::visibility_pattern(lqn::family_of(lqn::sylvester4()));
  bool plus = false, minus = false;
  for (int r = 0; r < sp.v.rows(); ++r) {
    for (int c = 0; c < sp.v.cols(); ++c) {
      if (!sp.defined(r, c)) continue;
      const double v = sp.v(r, c);
      CHECK(std::min(std::abs(v - 1.0), std::abs(v + 1.0)) < 1e-9);
      plus = plus || v > 0.5;
      minus = minus || v < -0.5;
    }
  }
  CHECK(plus);
  CHECK(minus);
}

TEST_CASE("visibility comparison: zero for identical families, positive otherwise") {
  const lqn::NetworkFamily fam = lqn::family_of(lqn::fourier4());
  const lqn::VisibilityComparison same = lqn::visibility_pattern(fam, fam);
  CHECK(same.delta_v == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(same.compared_entries > 0);

  // Perturb one member's phase.
  lqn::NetworkFamily bent = fam;
  bent.networks[0](1, 0) *= std::polar(1.0, 0.4);
  const lqn::VisibilityComparison diff = lqn::visibility_pattern(bent, fam);
  CHECK(diff.delta_v > 0.01);

  lqn::NetworkFamily wrong = fam;
  wrong.input_pairs[0] = {0, 3};
  CHECK_THROWS_AS(lqn::visibility_pattern(wrong, fam), std::invalid_argument);
}

TEST_CASE("visibility CSV layout with labeled pairs and empty undefined cells") {
  const std::string csv =
      lqn::visibility_csv(lqn::visibility_pattern(lqn::family_of(lqn::fourier4())));
  CHECK(csv.rfind("output_pair,in_1-2,in_1-3,in_1-4,in_2-3,in_2-4,in_3-4\n",
                  0) == 0);
  CHECK(csv.find("\n1-2,") != std::string::npos);
  CHECK(csv.find("\n3-4,") != std::string::npos);

  // A dark output row makes P_D vanish: undefined entries serialize as empty.
  CMatrix m(3, 2);
  m << Complex(0.6, 0.0), Complex(0.0, 0.4), Complex(0.1, 0.2),
      Complex(0.3, 0.0), Complex(0.0, 0.0), Complex(0.0, 0.0);
  lqn::NetworkFamily fam;
  fam.input_pairs = {{0, 1}};
  fam.networks = {m};
  const lqn::VisibilityPattern pattern = lqn::visibility_pattern(fam);
  REQUIRE(pattern.output_pairs.size() == 3);
  CHECK(pattern.defined(0, 0));
  CHECK(!pattern.defined(1, 0));  // pairs touching the dark output
  CHECK(!pattern.defined(2, 0));
  const std::string small = lqn::visibility_csv(pattern);
  CHECK(small.find("1-3,\n") != std::string::npos);
}

TEST_CASE("degree of violation: suppressed sets of the reference networks") {
  TwoPhotonInput indist;
  const CMatrix fourier_pair = lqn::columns_pair(lqn::fourier4(), 0, 2);
  const lqn::DegreeOfViolation self = lqn::degree_of_violation(
      fourier_pair, lqn::two_photon_distribution(fourier_pair, indist));
  CHECK(self.defined);
  CHECK(self.suppressed_count == 4);
  CHECK(self.value < 1e-12);

  // The neighbouring Fourier input pair suppresses the two output pairs
  // whose index difference is 2 (phase sum an odd multiple of pi).
  const CMatrix adjacent = lqn::columns_pair(lqn::fourier4(), 0, 1);
  const lqn::DegreeOfViolation near = lqn::degree_of_violation(
      adjacent, lqn::two_photon_distribution(adjacent, indist));
  CHECK(near.defined);
  CHECK(near.suppressed_count == 2);
  CHECK(near.value < 1e-12);

  // A generic matrix with no vanishing two-photon outcome has an empty
  // suppressed set, so the measure is undefined.
  CMatrix generic(2, 2);
  generic << Complex(0.6, 0.0), Complex(0.2, 0.0), Complex(0.2, 0.0),
      Complex(0.5, 0.0);
  const lqn::DegreeOfViolation none = lqn::degree_of_violation(
      generic, lqn::two_photon_distribution(generic, indist));
  CHECK(!none.defined);

  // Every Sylvester input pair suppresses configurations exactly.
  for (int p = 0; p < 4; ++p) {
    for (int q = p + 1; q < 4; ++q) {
      const CMatrix cols = lqn::columns_pair(lqn::sylvester4(), p, q);
      const lqn::DegreeOfViolation d = lqn::degree_of_violation(
          cols, lqn::two_photon_distribution(cols, indist));
      CHECK(d.defined);
      CHECK(d.suppressed_count >= 2);
      CHECK(d.value < 1e-12);
    }
  }

  // A detuned network leaks probability into the suppressed set.  The phase
  // detuning pushes the largest singular value slightly above one, so shrink
  // the network uniformly; the violation measure is a probability ratio and
  // does not see the common scale.
  CMatrix detuned = fourier_pair;
  detuned(0, 0) *= std::polar(1.0, 0.3);
  detuned *= 0.9;
  const lqn::DegreeOfViolation leak = lqn::degree_of_violation(
      fourier_pair, lqn::two_photon_distribution(detuned, indist));
  CHECK(leak.value > 1e-4);
  CHECK(leak.value < 1.0);

  CHECK_THROWS_AS(lqn::degree_of_violation(
                      fourier_pair,
                      lqn::two_photon_distribution(fourier_pair, indist), 0.0),
                  std::invalid_argument);
}

TEST_CASE("hom_scan: extremum at zero delay, plateau at large delay") {
  const CMatrix h = hadamard2();
  std::vector<double> delays;
  for (int i = -8; i <= 8; ++i) delays.push_back(i * 0.5e-12);
  delays.push_back(1e-10);
  const lqn::ExperimentResult scan = lqn::hom_scan(h, 0, 1, delays, 1.5e-12);
  CHECK(scan.columns == std::vector<std::string>{"delay_s", "x", "coincidence"});
  REQUIRE(scan.rows.size() == delays.size());

  double at_zero = -1.0, plateau = -1.0;
  for (const auto& row : scan.rows) {
    if (row[0] == 0.0) at_zero = row[2];
    if (row[0] == 1e-10) plateau = row[2];
  }
  CHECK(at_zero == doctest::Approx(0.0).epsilon(1e-12));       // full dip
  CHECK(plateau == doctest::Approx(0.5).epsilon(1e-6));        // P_D
  bool meta_ok = false;
  for (const auto& [key, value] : scan.metadata) {
    if (key == "input_pair") {
      meta_ok = true;
      CHECK(value == "1-2");
    }
  }
  CHECK(meta_ok);
}

TEST_CASE("dip FWHM equals the configured coherence FWHM") {
  const double fwhm = lqn::hom_feature_fwhm(hadamard2(), 1.5e-12);
  CHECK(fwhm == doctest::Approx(1.5e-12).epsilon(2e-4));
  // Scaling the coherence width scales the feature accordingly.
  const double wider = lqn::hom_feature_fwhm(hadamard2(), 3.0e-12);
  CHECK(wider == doctest::Approx(3.0e-12).epsilon(2e-4));
  // No interference contrast -> no feature.
  const double flat = lqn::hom_feature_fwhm(CMatrix::Identity(2, 2), 1.5e-12);
  CHECK(std::isnan(flat));
}

TEST_CASE("phase reconstruction: self-consistency") {
  const lqn::NetworkFamily templ = lqn::family_of(lqn::fourier4());
  const lqn::VisibilityPattern measured = lqn::visibility_pattern(templ);
  const lqn::ReconstructionResult rec = lqn::reconstruct_phases(measured, templ);
  REQUIRE(rec.residuals.size() == 6);
  for (double r : rec.residuals) CHECK(r < 1e-6);
  for (bool w : rec.warnings) CHECK(!w);
  CHECK(lqn::visibility_pattern(rec.family, templ).delta_v < 1e-6);
}

TEST_CASE("phase reconstruction: recovers a perturbed phase") {
  const lqn::NetworkFamily templ = lqn::family_of(lqn::fourier4());
  CMatrix truth = lqn::fourier4();
  truth(1, 1) *= std::polar(1.0, 0.3);
  const lqn::NetworkFamily truth_fam = lqn::family_of(truth);
  const lqn::VisibilityPattern measured = lqn::visibility_pattern(truth_fam);
  const lqn::ReconstructionResult rec = lqn::reconstruct_phases(measured, templ);
  for (double r : rec.residuals) CHECK(r < 1e-4);
  CHECK(lqn::visibility_pattern(rec.family, truth_fam).delta_v < 0.01);
}

TEST_CASE("phase reconstruction: noisy visibilities stay faithful") {
  // Measurement noise on the visibilities themselves must not pull the
  // reconstruction away from the generating networks.  Phases are only ever
  // determined up to per-row and per-column gauges, so the comparison target
  // must be the family the visibilities came from.
  const lqn::NetworkFamily templ = lqn::family_of(lqn::fourier4());
  for (int trial = 0; trial < 3; ++trial) {
    lqn::RandomStream rng(lqn::derive_seed(777, static_cast<std::uint64_t>(trial)));
    lqn::VisibilityPattern measured = lqn::visibility_pattern(templ);
    for (int r = 0; r < measured.v.rows(); ++r) {
      for (int c = 0; c < measured.v.cols(); ++c) {
        if (measured.defined(r, c)) {
          measured.v(r, c) += 0.02 * rng.normal();
        }
      }
    }
    const lqn::ReconstructionResult rec =
        lqn::reconstruct_phases(measured, templ,
                                lqn::derive_seed(778, static_cast<std::uint64_t>(trial)));
    double fid_sum = 0.0;
    for (std::size_t mb = 0; mb < rec.family.networks.size(); ++mb) {
      lqn::TargetTransform target;
      target.entries = templ.networks[mb];
      fid_sum += lqn::fidelity(target, rec.family.networks[mb]).value;
    }
    CHECK(fid_sum / 6.0 >= 0.95);
  }
}

TEST_CASE("lossy beamsplitter closed forms") {
  const CMatrix lossless = lqn::ltbs(kPi / 2.0, 0.5);
  CHECK(std::abs(lossless(0, 0) - Complex(0.5, 0.0)) < 1e-15);
  CHECK(std::abs(lossless(0, 1) - Complex(0.0, 0.5)) < 1e-15);
  // (1/sqrt2) times a unitary: both singular values 1/sqrt2.
  Eigen::JacobiSVD<CMatrix> svd(lossless);
  CHECK(svd.singularValues()(0) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(svd.singularValues()(1) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));

  Eigen::JacobiSVD<CMatrix> svd_pi(lqn::ltbs(kPi, 0.5));
  CHECK(svd_pi.singularValues()(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(svd_pi.singularValues()(1) == doctest::Approx(0.0).epsilon(1e-12));

  CHECK((lqn::ltbs(0.0, 0.3) - lqn::ltbs(2.0 * kPi, 0.3)).cwiseAbs().maxCoeff() <
        1e-12);
  CHECK_THROWS_AS(lqn::ltbs(0.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(lqn::ltbs(0.0, 0.51), std::invalid_argument);
  CHECK_THROWS_AS(lqn::ltbs(0.0, -0.5), std::invalid_argument);
}

TEST_CASE("coherent absorption network: survival closed forms") {
  TwoPhotonInput indist;
  const auto survival = [&](double phi, double alpha, double t) {
    return lqn::survival_probability(lqn::two_photon_distribution(
        lqn::coherent_absorption_network(phi, alpha, t), indist));
  };

  // Generic point against the analytic decomposition.
  const double phi = 0.7, alpha = 2.1, t = 0.4;
  const double t4 = t * t * t * t;
  const lqn::SurvivalProbability s = survival(phi, alpha, t);
  const double p20_expected =
      t4 / 2.0 * std::norm(1.0 - std::polar(1.0, 2.0 * (phi + alpha)));
  const double p02_expected =
      t4 / 2.0 *
      std::norm(std::polar(1.0, 2.0 * alpha) - std::polar(1.0, 2.0 * phi));
  const double p11_expected = t4 * std::norm(1.0 - std::polar(1.0, 2.0 * phi));
  CHECK(s.p20 == doctest::Approx(p20_expected).epsilon(1e-12));
  CHECK(s.p02 == doctest::Approx(p02_expected).epsilon(1e-12));
  CHECK(s.p11 == doctest::Approx(p11_expected).epsilon(1e-12));
  CHECK(s.total == doctest::Approx(p20_expected + p02_expected + p11_expected)
                       .epsilon(1e-12));
  CHECK(s.consistent);  // detector formula agrees with pre-splitter state

  // Lossless emulation: phi-independent quarter survival.
  for (double probe : {0.0, 0.4, 1.1, 2.9}) {
    const lqn::SurvivalProbability uniform = survival(probe, kPi / 2.0, 0.5);
    CHECK(uniform.total == doctest::Approx(0.25).epsilon(1e-9));
    CHECK(uniform.consistent);
  }

  // Fully lossy direction: N00N parity selects survival 1/2 or 0.
  CHECK(survival(kPi / 2.0, kPi, 0.5).total == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(survival(0.0, kPi, 0.5).total == doctest::Approx(0.0).epsilon(1e-9));

  // A generic lossless 4x2 block is not in the analysis-splitter geometry
  // the detector formula assumes: the cross-check must flag the mismatch,
  // while the direct collision accounting still conserves probability.
  const lqn::SurvivalProbability generic4 = lqn::survival_probability(
      lqn::two_photon_distribution(
          lqn::columns_pair(lqn::sylvester4(), 0, 1), indist));
  CHECK(!generic4.consistent);
  CHECK(generic4.p20_direct + generic4.p02_direct + generic4.p11 ==
        doctest::Approx(1.0).epsilon(1e-9));

  // Wrong arity rejected.
  CHECK_THROWS_AS(lqn::survival_probability(lqn::two_photon_distribution(
                      hadamard2(), indist)),
                  std::invalid_argument);
}

TEST_CASE("absorption scan: normalized surface shape and phase relations") {
  std::vector<double> phis;
  for (int g = 0; g <= 32; ++g) phis.push_back(2.0 * kPi * g / 32.0);
  const std::vector<double> alphas = {kPi / 2.0, kPi};
  const lqn::ExperimentResult surface = lqn::absorption_scan(phis, alphas, 0.5);
  CHECK(surface.columns ==
        std::vector<std::string>{"phi", "alpha", "t", "total", "p20", "p02",
                                 "p11", "normalized_total"});
  REQUIRE(surface.rows.size() == phis.size() * alphas.size());
  // Alpha-outer ordering.
  CHECK(surface.rows[0][1] == doctest::Approx(kPi / 2.0));
  CHECK(surface.rows[phis.size()][1] == doctest::Approx(kPi));

  double flat_min = 2.0, flat_max = 0.0, sin_min = 2.0, sin_max = 0.0;
  for (const auto& row : surface.rows) {
    const bool lossless_row = std::abs(row[1] - kPi / 2.0) < 1e-12;
    const double normalized = row[7];
    if (lossless_row) {
      flat_min = std::min(flat_min, normalized);
      flat_max = std::max(flat_max, normalized);
      // p11 oscillates against p20 + p02 while the total stays constant.
      CHECK(row[4] + row[5] + row[6] == doctest::Approx(row[3]).epsilon(1e-12));
      CHECK(row[3] == doctest::Approx(0.25).epsilon(1e-9));
    } else {
      sin_min = std::min(sin_min, normalized);
      sin_max = std::max(sin_max, normalized);
      // In-phase oscillation: p20 = p02 = p11 / 2 along the lossy row.
      CHECK(row[4] == doctest::Approx(row[5]).epsilon(1e-12));
      CHECK(row[6] == doctest::Approx(2.0 * row[4]).epsilon(1e-12));
    }
  }
  CHECK(flat_max - flat_min < 1e-9);
  CHECK(flat_max == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(sin_min == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(sin_max == doctest::Approx(2.0).epsilon(1e-9));

  // Out-of-phase structure on the lossless row, checked at the quarter points.
  const lqn::SurvivalProbability at0 = lqn::survival_probability(
      lqn::two_photon_distribution(
          lqn::coherent_absorption_network(0.0, kPi / 2.0, 0.5),
          TwoPhotonInput{}));
  const lqn::SurvivalProbability at_quarter = lqn::survival_probability(
      lqn::two_photon_distribution(
          lqn::coherent_absorption_network(kPi / 2.0, kPi / 2.0, 0.5),
          TwoPhotonInput{}));
  CHECK(at0.p11 == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(at0.p20 + at0.p02 == doctest::Approx(0.25).epsilon(1e-9));
  CHECK(at_quarter.p11 == doctest::Approx(0.25).epsilon(1e-9));
  CHECK(at_quarter.p20 + at_quarter.p02 == doctest::Approx(0.0).epsilon(1e-12));

  CHECK_THROWS_AS(lqn::absorption_scan({}, alphas, 0.5), std::invalid_argument);
}

TEST_CASE("three-mode embedding: unitarity and the t=1/2 identities") {
  for (double t : {0.1, 0.3, 0.5, 0.707}) {
    const lqn::ThreeModeReport rep = lqn::three_mode_ltbs_check(t);
    CHECK(rep.completed_unitarity_deviation <= 1e-12);
    CHECK(rep.f1 == doctest::Approx(std::sqrt(1.0 - 2.0 * t * t)).epsilon(1e-12));
    // The raw two-column Gram off-diagonal measures how far the stated
    // element pattern itself is from orthogonality: |4 t^2 - 1|.
    CHECK(rep.raw_gram_offdiag ==
          doctest::Approx(std::abs(4.0 * t * t - 1.0)).epsilon(1e-9));
  }

  const lqn::ThreeModeReport half = lqn::three_mode_ltbs_check(0.5);
  CHECK(half.raw_gram_offdiag == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(half.inverse_hom);
  CHECK(half.minus_aux_pair_prob == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(half.minus_other_prob == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(half.plus_survival == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(half.plus_absorption == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(half.plus_single_loss == doctest::Approx(0.0).epsilon(1e-9));

  // At t -> 1/sqrt(2) the auxiliary coupling f1 = sqrt(1 - 2t^2) vanishes;
  // t = 0.707 leaves sqrt(1 - 2*0.707^2) ~ 0.017.
  const lqn::ThreeModeReport boundary = lqn::three_mode_ltbs_check(0.707);
  CHECK(boundary.f1 < 0.02);

  CHECK_THROWS_AS(lqn::three_mode_ltbs_check(0.0), std::invalid_argument);
  CHECK_THROWS_AS(lqn::three_mode_ltbs_check(0.72), std::invalid_argument);
}
