#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lqn/medium.hpp"
#include "lqn/result.hpp"

namespace lqn {

// Desired k x m optical network: k targeted output ports, m input ports.
struct TargetTransform {
  CMatrix entries;

  int k() const { return static_cast<int>(entries.rows()); }
  int m() const { return static_cast<int>(entries.cols()); }
  // Throws std::invalid_argument on empty shape, non-finite entries, or an
  // all-zero column.
  void validate() const;
};

enum class ModulationConstraint { full_complex, phase_only };

struct FidelityResult {
  double value = 0.0;
  bool degenerate = false;  // comparison against an all-zero realization
};

struct Transmittance {
  double value = 0.0;
  bool defined = true;  // false when nothing is transmitted at all
};

// Result of programming a target through a medium: per-port unit-norm input
// fields, the effectively realized k x m network, and its quality metrics.
struct ProgrammedNetwork {
  std::vector<CVector> input_fields;   // m vectors, each n_in/m long
  CMatrix effective;                   // k x m
  std::vector<int> target_rows;        // k medium rows carrying the target
  double fidelity = 0.0;
  std::vector<double> transmittance;   // per-port gamma_j in [0, 1]
};

// m contiguous equal column blocks of the medium (full row set each).
std::vector<TransmissionMatrix> partition_ports(const TransmissionMatrix& tm,
                                                int m);

// Inverse-design input field for one port: full_complex returns the
// phase-conjugate solution Tj^dagger * Lj normalized to unit Euclidean norm;
// phase_only keeps only the element-wise phases (unit-modulus entries scaled
// to unit norm). Tj is the port block restricted to the target rows.
CVector solve_input_field(const CMatrix& Tj, const CVector& Lj,
                          ModulationConstraint constraint);

// Effectively realized network: column j = (target rows of port block j) *
// fields[j]. Amplitudes are kept absolute (no renormalization).
CMatrix effective_network(const TransmissionMatrix& tm,
                          const std::vector<int>& target_rows,
                          const std::vector<CVector>& fields);

// 1 - mean element-wise absolute deviation between the target (scaled to
// unit mean element modulus) and the realization aligned by the single
// complex scalar that minimizes the Frobenius distance. Scalar-invariant by
// construction; 1.0 iff equal up to a global complex factor.
FidelityResult fidelity(const TargetTransform& target, const CMatrix& realized);

// gamma_j: power delivered into the target rows over the total power
// transmitted through the port block, for a unit-norm port field.
Transmittance transmittance(const TransmissionMatrix& tm,
                            const std::vector<int>& target_rows, int port,
                            const CVector& field);

// Convenience composition: solve all port fields, realize the network, and
// attach fidelity and per-port transmittance.
ProgrammedNetwork program_network(
    const TransmissionMatrix& tm, const std::vector<int>& target_rows,
    const TargetTransform& target,
    ModulationConstraint constraint = ModulationConstraint::full_complex);

// Random k x m target with iid complex Gaussian entries, each column scaled
// to unit norm so all input ports carry equal average flux.
TargetTransform sample_target(int k, int m, RandomStream& rng);

enum class MediumModel { RM, RUM, FILE };

struct ScalingConfig {
  MediumModel model = MediumModel::RM;
  std::vector<int> n_list;
  int m = 2;
  int k = 4;
  int trials = 100;
  std::uint64_t seed = 0;
  ModulationConstraint constraint = ModulationConstraint::full_complex;
  const TransmissionMatrix* file_tm = nullptr;  // required for FILE
};

// Per n: draw a fresh medium and a fresh random target each trial, program,
// and record fidelity and mean transmittance. For FILE, each trial uses a
// random n-row / n-column subsample of the loaded matrix. Rows are one per n:
// n,m,k,trials,fidelity_mean,fidelity_std,transmittance_mean.
ExperimentResult scaling_experiment(const ScalingConfig& cfg);

}  // namespace lqn
