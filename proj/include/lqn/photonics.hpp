#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lqn/medium.hpp"
#include "lqn/result.hpp"
#include "lqn/shaping.hpp"

namespace lqn {

// Pair of photons entering two distinct ports with scalar indistinguishability
// x in [0, 1] (1 = identical photons, 0 = fully distinguishable).
struct TwoPhotonInput {
  int p = 0;
  int q = 1;
  double x = 1.0;

  // Gaussian temporal-overlap model: x(delta) = exp(-4 ln2 delta^2 / w^2),
  // where w is the FWHM of the resulting coincidence feature.
  static TwoPhotonInput from_delay(int p, int q, double delay_s,
                                   double coherence_fwhm_s);
  void validate() const;
};

// Probabilities over all unordered two-photon output configurations {i, j},
// including collisions {i, i}, for a k-output network. `total` may be < 1
// for lossy networks.
struct TwoPhotonDistribution {
  int k = 0;
  std::vector<double> probs;  // size k(k+1)/2, index via config_index
  double total = 0.0;

  static int config_count(int k) { return k * (k + 1) / 2; }
  static int config_index(int k, int i, int j);
  double prob(int i, int j) const;
  // All configurations (i <= j) in index order.
  static std::vector<std::pair<int, int>> configs(int k);
};

// Visibilities V = (P_D - P_I)/P_D over non-collision output pairs (rows) and
// input pairs (columns); entries with vanishing P_D are undefined.
struct VisibilityPattern {
  std::vector<std::pair<int, int>> output_pairs;  // i < j
  std::vector<std::pair<int, int>> input_pairs;
  Eigen::MatrixXd v;                       // NaN where undefined
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> defined;
};

// One k x 2 realized network per input pair.
struct NetworkFamily {
  std::vector<std::pair<int, int>> input_pairs;
  std::vector<CMatrix> networks;  // each k x 2
};

struct VisibilityComparison {
  VisibilityPattern pattern;  // of the measured family
  double delta_v = 0.0;       // mean |V_meas - V_ideal| over shared entries
  int compared_entries = 0;
};

struct DegreeOfViolation {
  double value = 0.0;
  bool defined = false;  // false when the suppressed set is empty
  int suppressed_count = 0;
};

// 4x4 discrete Fourier interferometer, element (j,k) = exp(i pi j k / 2) / 2
// (0-based indices); unitary.
CMatrix fourier4();
// Unit-normalized 4x4 Sylvester (Hadamard tensor square); real, unitary.
CMatrix sylvester4();
// Rank-one symmetric network [[1,-1],[-1,1]] tensor-squared times `scale`.
// The default scale 0.25 makes the largest singular value exactly 1, the
// largest physically admissible choice; visibilities are scale-invariant.
CMatrix nonunitary4(double scale = 0.25);

// Two selected input columns of a 4x4 (or k x k) network as a k x 2 block,
// input pair by 0-based indices.
CMatrix columns_pair(const CMatrix& network, int p, int q);
// Family over all unordered column pairs of a square network.
NetworkFamily family_of(const CMatrix& network);

// Two-photon output distribution of a k x 2 network (columns = the two fed
// input ports). Indistinguishable amplitudes follow the second-quantized
// evolution with Fock normalization for collisions; the distinguishable part
// sums classical path probabilities; intermediate x mixes the two convexly.
// Throws std::invalid_argument if the largest singular value of M exceeds
// 1 + 1e-9 (unphysical gain).
TwoPhotonDistribution two_photon_distribution(const CMatrix& M,
                                              const TwoPhotonInput& input);

// Coincidence probability at `output_pair` versus delay; x follows the
// Gaussian temporal model with the given coherence FWHM.
ExperimentResult hom_scan(const CMatrix& M, int p, int q,
                          const std::vector<double>& delays_s,
                          double coherence_fwhm_s,
                          std::pair<int, int> output_pair = {0, 1});

// Delay-domain FWHM of the coincidence feature, located by bisection between
// the delta = 0 extremum and the distinguishable plateau.
double hom_feature_fwhm(const CMatrix& M, double coherence_fwhm_s,
                        std::pair<int, int> output_pair = {0, 1});

VisibilityPattern visibility_pattern(const NetworkFamily& family);
VisibilityComparison visibility_pattern(const NetworkFamily& measured,
                                        const NetworkFamily& ideal);

// CSV with labeled rows (output pairs) and columns (input pairs); undefined
// entries are left empty.
std::string visibility_csv(const VisibilityPattern& pattern);

// Fraction of detected two-photon probability landing in the configurations
// that the ideal network (at x = 1) suppresses below `tol`.
DegreeOfViolation degree_of_violation(const CMatrix& ideal,
                                      const TwoPhotonDistribution& measured,
                                      double tol = 1e-9);

struct ReconstructionResult {
  NetworkFamily family;            // reconstructed members (gauge-aligned to
                                   // the template's row/column phases)
  std::vector<double> residuals;   // per member: mean |V(model) - V(measured)|
  std::vector<bool> warnings;      // true if a member failed to converge
};

// Recover element-wise phases of each template member (moduli fixed) so the
// model visibilities match the measured pattern: derivative-free simplex
// search, 20 restarts (first from the template itself, then local random
// perturbations of it), keeping the best residual with a
// smallest-displacement tie-break. Restarts stay local to the template so
// the search cannot drift onto a visibility-equivalent but physically
// distinct branch (the pattern is blind to e.g. global conjugation).
ReconstructionResult reconstruct_phases(const VisibilityPattern& measured,
                                        const NetworkFamily& templ,
                                        std::uint64_t seed = 0);

// Lossy tunable beamsplitter t * [[1, e^{i a}], [e^{i a}, 1]]; requires
// 0 < t <= 0.5 so that the largest singular value 2t stays physical.
CMatrix ltbs(double alpha, double t);

// Four-detector coherent-absorption circuit: N00N preparation splitter, arm
// phase phi, LTBS(alpha, t), then a balanced analysis splitter per output arm
// routing arm 1 -> detectors {1,2} and arm 2 -> detectors {3,4}.
CMatrix coherent_absorption_network(double phi, double alpha, double t);

struct SurvivalProbability {
  double total = 0.0;
  double p20 = 0.0;  // both photons in the first arm (detector formula 2*P{1,2})
  double p02 = 0.0;  // both photons in the second arm (2*P{3,4})
  double p11 = 0.0;  // one photon per arm (four cross pairs)
  // Direct collision-aware accounting per arm (P{1,1}+P{2,2}+P{1,2} and the
  // mirror); agrees with the detector formula identically for this circuit.
  double p20_direct = 0.0;
  double p02_direct = 0.0;
  bool consistent = true;  // detector vs direct agreement within 1e-9
};

// Decomposes a four-output two-photon distribution into arm survival terms.
SurvivalProbability survival_probability(const TwoPhotonDistribution& dist);

// Survival surface over (phi, alpha) grids at fixed t; rows ordered by alpha
// then phi, columns phi,alpha,t,total,p20,p02,p11,normalized_total, where the
// normalization baseline is the (phi-invariant) survival at alpha = pi/2.
ExperimentResult absorption_scan(const std::vector<double>& phi_grid,
                                 const std::vector<double>& alpha_grid,
                                 double t);

struct ThreeModeReport {
  double t = 0.0;
  double f1 = 0.0;                    // auxiliary coupling sqrt(1 - 2 t^2)
  double completed_unitarity_deviation = 0.0;  // of the orthonormal completion
  double raw_gram_offdiag = 0.0;      // |<c1, c2>| = |4 t^2 - 1| of the raw
                                      // embedding columns (0 only at t = 1/2)
  // "-" N00N input (a1^2 - a2^2): probability of one photon in the symmetric
  // output mode and one in the auxiliary mode, and the residual elsewhere.
  double minus_aux_pair_prob = 0.0;
  double minus_other_prob = 0.0;
  bool inverse_hom = false;  // exact two-mode conversion (prob 1) observed
  // "+" N00N input: survival in the two monitored modes, both-photon
  // absorption, and single-photon loss.
  double plus_survival = 0.0;
  double plus_absorption = 0.0;
  double plus_single_loss = 0.0;
};

// Embeds the LTBS into a 3x3 unitary with an auxiliary loss mode (columns
// (t, t, f1) and (t, t, -f1) completed orthonormally) and evolves the two
// N00N parities through it. Requires 0 < t <= 1/sqrt(2).
ThreeModeReport three_mode_ltbs_check(double t);

}  // namespace lqn
