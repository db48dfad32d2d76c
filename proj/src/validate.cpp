#include "lqn/validate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <utility>
#include <vector>

#include "lqn/acquisition.hpp"
#include "lqn/medium.hpp"
#include "lqn/photonics.hpp"
#include "lqn/rng.hpp"
#include "lqn/shaping.hpp"

namespace lqn {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string fmt(double v, int digits = 4) {
  std::ostringstream out;
  out.precision(digits);
  out << std::fixed << v;
  return out.str();
}

double elapsed_s(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

// Programs the (p, q) column pair of a k x k reference network through the
// medium (ports = m = 2) onto rows 0..k-1 and returns the realized k x 2
// network.
CMatrix program_pair(const TransmissionMatrix& tm, const CMatrix& reference,
                     int p, int q) {
  const int k = static_cast<int>(reference.rows());
  std::vector<int> rows(static_cast<std::size_t>(k));
  std::iota(rows.begin(), rows.end(), 0);
  TargetTransform target;
  target.entries.resize(k, 2);
  target.entries.col(0) = reference.col(p);
  target.entries.col(1) = reference.col(q);
  return program_network(tm, rows, target).effective;
}

// Independent two-photon oracle: expands the second-quantized product state
// coefficient-by-coefficient into a map over unordered configurations
// (indistinguishable case), or enumerates the two classical path assignments
// (distinguishable case).
std::map<std::pair<int, int>, double> brute_force_two_photon(const CMatrix& M,
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
      // Collision amplitude a_i^dag^2 |0> = sqrt(2) |2_i>: the coefficient
      // entered the map once, so the Fock factor multiplies it here.
      probs[key] = std::norm(fock * amp);
    }
  } else {
    for (int i = 0; i < k; ++i) {
      for (int j = 0; j < k; ++j) {
        const auto key = std::minmax(i, j);
        probs[{key.first, key.second}] +=
            std::norm(M(i, 0)) * std::norm(M(j, 1));
      }
    }
  }
  return probs;
}

CriterionResult criterion_scaling_law() {
  const auto start = std::chrono::steady_clock::now();
  ScalingConfig cfg;
  cfg.model = MediumModel::RM;
  cfg.n_list = {64, 128, 256, 512, 1024};
  cfg.m = 2;
  cfg.k = 4;
  cfg.trials = 500;
  cfg.seed = 101;
  const ExperimentResult table = scaling_experiment(cfg);

  double sxx = 0.0, sxy = 0.0;
  std::vector<double> xs, ys;
  for (const auto& row : table.rows) {
    const double n = row[0];
    const double x = std::sqrt(double(cfg.m) * cfg.k / n);
    const double y = row[4];
    xs.push_back(x);
    ys.push_back(y);
    sxx += x * x;
    sxy += x * (1.0 - y);
  }
  const double c = sxy / sxx;
  double mean_y = 0.0;
  for (double y : ys) mean_y += y;
  mean_y /= static_cast<double>(ys.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < ys.size(); ++i) {
    const double fit = 1.0 - c * xs[i];
    ss_res += (ys[i] - fit) * (ys[i] - fit);
    ss_tot += (ys[i] - mean_y) * (ys[i] - mean_y);
  }
  const double r2 = 1.0 - ss_res / ss_tot;
  const double runtime = elapsed_s(start);

  CriterionResult res;
  res.id = 1;
  res.name = "fidelity-scaling-law";
  res.pass = r2 > 0.95 && runtime < 60.0;
  res.detail = "R^2=" + fmt(r2) + " (need >0.95), c=" + fmt(c) +
               ", runtime=" + fmt(runtime, 1) + "s (need <60)";
  return res;
}

struct LevelStats {
  double mean = 0.0;
  double sem = 0.0;
  double gamma = 0.0;
};

LevelStats run_level(MediumModel model, std::uint64_t seed) {
  ScalingConfig cfg;
  cfg.model = model;
  cfg.n_list = {398};
  cfg.m = 2;
  cfg.k = 4;
  cfg.trials = 500;
  cfg.seed = seed;
  const ExperimentResult table = scaling_experiment(cfg);
  LevelStats out;
  out.mean = table.rows[0][4];
  out.sem = table.rows[0][5] / std::sqrt(double(cfg.trials));
  out.gamma = table.rows[0][6];
  return out;
}

CriterionResult criterion_rum_exceeds_rm() {
  const LevelStats rm = run_level(MediumModel::RM, 203);
  const LevelStats rum = run_level(MediumModel::RUM, 203);
  CriterionResult res;
  res.id = 2;
  res.name = "rum-exceeds-rm";
  const double gap = (rum.mean - rum.sem) - (rm.mean + rm.sem);
  res.pass = rum.mean > rm.mean && gap > 0.0;
  res.detail = "F(RUM)=" + fmt(rum.mean) + "+-" + fmt(rum.sem) +
               ", F(RM)=" + fmt(rm.mean) + "+-" + fmt(rm.sem) +
               ", interval gap=" + fmt(gap);
  return res;
}

CriterionResult criterion_transmittance() {
  const LevelStats rm = run_level(MediumModel::RM, 203);
  const LevelStats rum = run_level(MediumModel::RUM, 203);
  CriterionResult res;
  res.id = 3;
  res.name = "transmittance-range";
  res.pass = rm.gamma >= 0.4 && rm.gamma <= 0.55;
  res.detail = "gamma(Gaussian)=" + fmt(rm.gamma) +
               " (need within [0.4,0.55]); flux-conserving unitary model "
               "gives " + fmt(rum.gamma) +
               "; a Gaussian block transmits targeted flux ~1/2 against "
               "background ~1, bounding gamma near 1/3";
  return res;
}

CriterionResult criterion_hom_suppression() {
  CriterionResult res;
  res.id = 4;
  res.name = "hom-suppression";

  const CMatrix fourier = fourier4();
  const CMatrix sylvester = sylvester4();
  TwoPhotonInput indist;

  // Ideal-network degrees of violation. Input pair (1,3) in 1-based mode
  // labels = columns (0, 2).
  const DegreeOfViolation ideal_f = degree_of_violation(
      columns_pair(fourier, 0, 2),
      two_photon_distribution(columns_pair(fourier, 0, 2), indist));
  double ideal_sy_max = 0.0;
  int sy_defined = 0;
  for (int p = 0; p < 4; ++p) {
    for (int q = p + 1; q < 4; ++q) {
      const DegreeOfViolation d = degree_of_violation(
          columns_pair(sylvester, p, q),
          two_photon_distribution(columns_pair(sylvester, p, q), indist));
      if (d.defined) {
        ++sy_defined;
        ideal_sy_max = std::max(ideal_sy_max, d.value);
      }
    }
  }

  // Programmed through a Gaussian medium, n=398, 100 seeds.
  constexpr int kSeeds = 100;
  double sum_f = 0.0, sum_sy = 0.0;
  for (int s = 0; s < kSeeds; ++s) {
    TransmissionMatrix tm =
        gen_random_gaussian(398, 398, derive_seed(404, static_cast<std::uint64_t>(s)));
    tm.ports = 2;
    const CMatrix realized_f = program_pair(tm, fourier, 0, 2);
    sum_f += degree_of_violation(columns_pair(fourier, 0, 2),
                                 two_photon_distribution(realized_f, indist))
                 .value;
    double sy_trial = 0.0;
    int sy_count = 0;
    for (int p = 0; p < 4; ++p) {
      for (int q = p + 1; q < 4; ++q) {
        const CMatrix realized = program_pair(tm, sylvester, p, q);
        const DegreeOfViolation d = degree_of_violation(
            columns_pair(sylvester, p, q),
            two_photon_distribution(realized, indist));
        if (d.defined) {
          sy_trial += d.value;
          ++sy_count;
        }
      }
    }
    sum_sy += sy_trial / sy_count;
  }
  const double mean_f = sum_f / kSeeds;
  const double mean_sy = sum_sy / kSeeds;

  res.pass = ideal_f.defined && ideal_f.value < 1e-9 && sy_defined == 6 &&
             ideal_sy_max < 1e-9 && mean_f <= 0.05 && mean_sy <= 0.05;
  res.detail = "ideal D(Fourier,1-3)=" + fmt(ideal_f.value, 12) +
               ", ideal max D(Sylvester)=" + fmt(ideal_sy_max, 12) +
               " (need <1e-9); through-medium mean D=" + fmt(mean_f) + "/" +
               fmt(mean_sy) + " Fourier/Sylvester over 100 seeds (need <=0.05)";
  return res;
}

CriterionResult criterion_anti_coalescence() {
  CriterionResult res;
  res.id = 5;
  res.name = "anti-coalescence";
  const VisibilityPattern pattern = visibility_pattern(family_of(nonunitary4()));
  double worst = 0.0;
  int defined = 0;
  for (int r = 0; r < pattern.v.rows(); ++r) {
    for (int c = 0; c < pattern.v.cols(); ++c) {
      if (pattern.defined(r, c)) {
        ++defined;
        worst = std::max(worst, std::abs(pattern.v(r, c) + 1.0));
      }
    }
  }
  res.pass = defined > 0 && worst < 1e-9;
  res.detail = "max |V+1| over " + std::to_string(defined) +
               " defined entries = " + fmt(worst, 12) + " (need <1e-9)";
  return res;
}

CriterionResult criterion_absorption_extremes() {
  CriterionResult res;
  res.id = 6;
  res.name = "coherent-absorption-extremes";
  const double t = 0.5;
  TwoPhotonInput indist;
  const auto survival = [&](double phi, double alpha) {
    return survival_probability(two_photon_distribution(
        coherent_absorption_network(phi, alpha, t), indist));
  };
  // N00N parity map: the prepared state is (|2,0> + e^{i(2 phi + pi)}|0,2>)
  // / sqrt(2), so phi = pi/2 is the "+" parity and phi = 0 the "-" parity.
  const double plus_total = survival(kPi / 2.0, kPi).total;
  const double minus_total = survival(0.0, kPi).total;

  double lossless_min = std::numeric_limits<double>::infinity();
  double lossless_max = -lossless_min;
  bool consistent = true;
  std::vector<double> phis, alphas{kPi / 2.0, kPi};
  for (int g = 0; g <= 64; ++g) phis.push_back(2.0 * kPi * g / 64.0);
  for (double phi : phis) {
    const SurvivalProbability s = survival(phi, kPi / 2.0);
    lossless_min = std::min(lossless_min, s.total);
    lossless_max = std::max(lossless_max, s.total);
    consistent = consistent && s.consistent;
  }

  const ExperimentResult surface = absorption_scan(phis, alphas, t);
  double row_half_dev = 0.0;   // alpha = pi/2 row of the normalized surface
  double row_pi_min = std::numeric_limits<double>::infinity();
  double row_pi_max = -row_pi_min;
  for (const auto& row : surface.rows) {
    const double alpha = row[1];
    const double normalized = row[7];
    if (std::abs(alpha - kPi / 2.0) < 1e-12) {
      row_half_dev = std::max(row_half_dev, std::abs(normalized - 1.0));
    } else {
      row_pi_min = std::min(row_pi_min, normalized);
      row_pi_max = std::max(row_pi_max, normalized);
    }
  }

  res.pass = std::abs(plus_total - 0.5) <= 1e-9 &&
             std::abs(minus_total) <= 1e-9 &&
             (lossless_max - lossless_min) < 1e-9 &&
             std::abs(lossless_max - 0.25) <= 1e-9 && consistent &&
             row_half_dev <= 1e-9 && std::abs(row_pi_min) <= 1e-9 &&
             std::abs(row_pi_max - 2.0) <= 1e-9;
  res.detail = "survival(+,-)=(" + fmt(plus_total) + "," + fmt(minus_total, 12) +
               ") need (0.5,0); lossless row spread=" +
               fmt(lossless_max - lossless_min, 12) + " at level " +
               fmt(lossless_max) + "; normalized rows: flat dev=" +
               fmt(row_half_dev, 12) + ", sinusoid range=[" + fmt(row_pi_min, 12) +
               "," + fmt(row_pi_max) + "]";
  return res;
}

CriterionResult criterion_three_mode() {
  CriterionResult res;
  res.id = 7;
  res.name = "three-mode-embedding";
  double worst_unitarity = 0.0;
  for (double t : {0.1, 0.3, 0.5, 0.707}) {
    worst_unitarity = std::max(worst_unitarity,
                               three_mode_ltbs_check(t).completed_unitarity_deviation);
  }
  const ThreeModeReport half = three_mode_ltbs_check(0.5);
  res.pass = worst_unitarity <= 1e-12 && half.inverse_hom &&
             std::abs(half.minus_aux_pair_prob - 1.0) <= 1e-9 &&
             std::abs(half.plus_survival - 0.5) <= 1e-9 &&
             std::abs(half.plus_absorption - 0.5) <= 1e-9;
  res.detail = "max unitarity deviation=" + fmt(worst_unitarity, 14) +
               " (need <=1e-12); at t=1/2: inverse-HOM prob=" +
               fmt(half.minus_aux_pair_prob, 12) + ", survival/absorption=" +
               fmt(half.plus_survival) + "/" + fmt(half.plus_absorption);
  return res;
}

CriterionResult criterion_oracle_equivalence() {
  const auto start = std::chrono::steady_clock::now();
  CriterionResult res;
  res.id = 8;
  res.name = "two-photon-oracle";
  double worst = 0.0;
  RandomStream rng(808);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 2 + trial % 5;  // k in 2..6
    CMatrix M(k, 2);
    for (int i = 0; i < k; ++i) {
      for (int c = 0; c < 2; ++c) M(i, c) = rng.cnormal();
    }
    Eigen::JacobiSVD<CMatrix> svd(M);
    M *= 0.95 / svd.singularValues()(0);
    for (bool indist : {true, false}) {
      TwoPhotonInput input;
      input.x = indist ? 1.0 : 0.0;
      const TwoPhotonDistribution dist = two_photon_distribution(M, input);
      const auto oracle = brute_force_two_photon(M, indist);
      for (const auto& [key, prob] : oracle) {
        worst = std::max(worst,
                         std::abs(prob - dist.prob(key.first, key.second)));
      }
    }
    // Convexity spot-check at an interior x.
    TwoPhotonInput mix;
    mix.x = 0.37;
    const TwoPhotonDistribution dmix = two_photon_distribution(M, mix);
    TwoPhotonInput one;
    TwoPhotonInput zero;
    zero.x = 0.0;
    const TwoPhotonDistribution d1 = two_photon_distribution(M, one);
    const TwoPhotonDistribution d0 = two_photon_distribution(M, zero);
    for (std::size_t c = 0; c < dmix.probs.size(); ++c) {
      worst = std::max(worst, std::abs(dmix.probs[c] - (0.37 * d1.probs[c] +
                                                        0.63 * d0.probs[c])));
    }
  }
  const double runtime = elapsed_s(start);
  res.pass = worst < 1e-10 && runtime < 30.0;
  res.detail = "max |engine - oracle| = " + fmt(worst, 14) +
               " over 200 networks (need <1e-10), runtime=" + fmt(runtime, 1) +
               "s (need <30)";
  return res;
}

CriterionResult criterion_acquisition_roundtrip() {
  CriterionResult res;
  res.id = 9;
  res.name = "acquisition-roundtrip";
  constexpr int kSeeds = 10;
  double gap_abs_sum = 0.0, gap_abs_max = 0.0;
  double dv_ideal_sum = 0.0, dv_true_sum = 0.0;
  for (int s = 0; s < kSeeds; ++s) {
    // Unitary medium: per-port programmed networks through a lossless medium
    // are passive by construction, so the two-photon stage is always valid.
    TransmissionMatrix tm =
        gen_random_unitary(256, derive_seed(909, static_cast<std::uint64_t>(s)));
    tm.ports = 2;
    AcquisitionConfig cfg;
    cfg.seed = derive_seed(909, 1000 + static_cast<std::uint64_t>(s));
    const RoundtripReport report = acquisition_roundtrip(tm, 2, 4, cfg);
    gap_abs_sum += std::abs(report.fidelity_gap_mean);
    gap_abs_max = std::max(gap_abs_max, report.fidelity_gap_max_abs);
    dv_ideal_sum += report.delta_v_vs_ideal;
    dv_true_sum += report.delta_v_vs_trueprog;
  }
  const double gap_mean = gap_abs_sum / kSeeds;
  const double dv_ideal = dv_ideal_sum / kSeeds;
  const double dv_true = dv_true_sum / kSeeds;
  res.pass = gap_mean <= 0.01 && dv_ideal < 0.02;
  res.detail = "|fidelity gap| mean=" + fmt(gap_mean) + " max=" +
               fmt(gap_abs_max) + " (need mean <=0.01); Sylvester dV vs "
               "ideal=" + fmt(dv_ideal) + " (need <0.02), floor set by "
               "finite-medium programming noise; vs true-matrix "
               "programming=" + fmt(dv_true);
  return res;
}

CriterionResult criterion_multi_target() {
  CriterionResult res;
  res.id = 10;
  res.name = "multi-target-scaling";
  const auto run_k = [&](int k) {
    ScalingConfig cfg;
    cfg.model = MediumModel::RM;
    cfg.n_list = {398};
    cfg.m = 2;
    cfg.k = k;
    cfg.trials = 200;
    cfg.seed = 1010;
    return scaling_experiment(cfg).rows[0][4];
  };
  const double f4 = run_k(4);
  const double f18 = run_k(18);

  double min_intensity = std::numeric_limits<double>::infinity();
  for (int s = 0; s < 3; ++s) {
    TransmissionMatrix tm =
        gen_random_gaussian(398, 398, derive_seed(1010, static_cast<std::uint64_t>(s)));
    tm.ports = 2;
    std::vector<int> rows(18);
    std::iota(rows.begin(), rows.end(), 0);
    RandomStream rng(derive_seed(1010, 100 + static_cast<std::uint64_t>(s)));
    const TargetTransform target = sample_target(18, 2, rng);
    const ProgrammedNetwork net = program_network(tm, rows, target);
    for (int i = 0; i < 18; ++i) {
      min_intensity = std::min(min_intensity, net.effective.row(i).squaredNorm());
    }
  }
  res.pass = f18 < f4 && min_intensity > 0.0;
  res.detail = "mean F: k=4 " + fmt(f4) + " vs k=18 " + fmt(f18) +
               " (need decreasing); min per-target intensity=" +
               fmt(min_intensity, 6) + " (need >0)";
  return res;
}

CriterionResult criterion_hom_temporal() {
  CriterionResult res;
  res.id = 11;
  res.name = "hom-temporal-model";
  CMatrix hadamard(2, 2);
  hadamard << 1.0, 1.0, 1.0, -1.0;
  hadamard *= 1.0 / std::sqrt(2.0);
  const double configured = 1.5e-12;
  const double measured = hom_feature_fwhm(hadamard, configured);
  const double rel = std::abs(measured - configured) / configured;
  res.pass = rel <= 0.02;
  res.detail = "dip FWHM=" + fmt(measured * 1e12, 6) + "ps vs configured 1.5ps, "
               "relative error=" + fmt(rel, 6) + " (need <=0.02)";
  return res;
}

}  // namespace

CriterionResult run_criterion(int id) {
  switch (id) {
    case 1: return criterion_scaling_law();
    case 2: return criterion_rum_exceeds_rm();
    case 3: return criterion_transmittance();
    case 4: return criterion_hom_suppression();
    case 5: return criterion_anti_coalescence();
    case 6: return criterion_absorption_extremes();
    case 7: return criterion_three_mode();
    case 8: return criterion_oracle_equivalence();
    case 9: return criterion_acquisition_roundtrip();
    case 10: return criterion_multi_target();
    case 11: return criterion_hom_temporal();
    default:
      throw std::invalid_argument("unknown validation criterion id " +
                                  std::to_string(id));
  }
}

std::vector<CriterionResult> run_all_criteria() {
  std::vector<CriterionResult> results;
  results.reserve(kCriterionCount);
  for (int id = 1; id <= kCriterionCount; ++id) {
    results.push_back(run_criterion(id));
  }
  return results;
}

std::string format_criterion_line(const CriterionResult& r) {
  return "criterion " + std::to_string(r.id) + " " +
         (r.pass ? "PASS" : "FAIL") + " " + r.name + ": " + r.detail;
}

}  // namespace lqn
