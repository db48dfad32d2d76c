#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "lqn/medium.hpp"
#include "lqn/photonics.hpp"
#include "lqn/shaping.hpp"

namespace lqn {

struct AcquisitionConfig {
  int phase_steps = 4;  // >= 3 for exact single-harmonic quadrature retrieval
  // Expected counts per intensity measurement; infinity = noiseless.
  double photon_budget = std::numeric_limits<double>::infinity();
  double reference_strength = 1.0;
  std::uint64_t seed = 0;
  // Divide each measured row by the reference modulus estimated from one
  // reference-only intensity frame (removes the per-row modulus variation of
  // the speckle reference, leaving per-row phase factors only).
  bool normalize_rows = true;

  void validate() const;
};

// Holographic estimate of one port block restricted to the target rows. The
// rows carry the conjugated reference field; all ports share one speckle
// reference vector while each port's acquisition drifts by one complex
// scalar, so inter-port consistency is off by exactly that scalar.
// `reference_factor_true` exposes the drift for tests only; consumers must
// treat it as unknown and recover it through calibration.
struct PortMeasurement {
  CMatrix matrix;  // k x (n_in/m)
  int port_index = 0;
  Complex reference_factor_true{1.0, 0.0};
};

// Counts returned by the calibration oracle for a programmed field set:
// per-target-output intensities for the coherent sum of all injected port
// fields, and the two-photon coincidence distribution over output pairs when
// exactly two ports inject one photon each.
struct OracleCounts {
  std::vector<double> singles;
  TwoPhotonDistribution coincidences;
};

// Evaluates physical counts for per-port input fields (zero-size vectors mark
// inactive ports). Implementations must be deterministic.
using CalibrationOracle = std::function<OracleCounts(
    const std::vector<CVector>& port_fields, double x)>;

struct CalibrationReport {
  std::vector<Complex> factors;        // applied correction per port (port 0 = 1)
  std::vector<double> stage1_modulus;  // singles-based modulus estimates
  std::vector<double> stage2_phase;    // coincidence-based phase estimates
  double residual_delta_v = 0.0;       // objective value after refinement
  double objective_range = 0.0;        // spread of the phase objective over
                                       // the search grid; ~0 certifies that no
                                       // visibility-observable inter-port
                                       // scalar error remains
  bool phase_objective_flat = false;
  std::string to_json() const;
};

struct CalibrationOutput {
  TransmissionMatrix calibrated;  // k x n_in estimate, ports = m
  CalibrationReport report;
};

// Phase-shifting holographic acquisition of one port: for each input mode and
// target row, synthesizes P intensity frames |r_i + w^p t_ie|^2 (w the P-th
// root of unity), applies Poisson noise at the photon budget when finite, and
// retrieves conj(r_i) t_ie by discrete quadrature, exactly for P >= 3.
PortMeasurement acquire_port(const TransmissionMatrix& tm_true, int port,
                             const std::vector<int>& target_rows,
                             const AcquisitionConfig& cfg);

// Reconciles per-port factors: stage 1 estimates each port's relative modulus
// from predicted-versus-measured singles of a uniform-target programming;
// stage 2 refines the relative phase by scalar minimization (coarse grid plus
// golden-section) of the visibility mismatch of the uniform network. Returns
// the measurements merged into one matrix with port factors divided out
// (one global factor remains free). Throws std::runtime_error on degenerate
// counts.
CalibrationOutput calibrate_ports(const std::vector<PortMeasurement>& ports,
                                  const CalibrationOracle& oracle);

struct RoundtripReport {
  // Programming quality through the acquired-and-calibrated matrix versus
  // programming through the true matrix, over `targets` random targets.
  double fidelity_true_mean = 0.0;      // baseline: true-matrix programming
  double fidelity_measured_mean = 0.0;  // acquired matrix, reference gauge
                                        // compensated from the true factors
  double fidelity_gap_mean = 0.0;       // measured - true, gauge compensated
  double fidelity_gap_max_abs = 0.0;
  double fidelity_estimated_mean = 0.0;  // calibration estimates only
  double fidelity_raw_mean = 0.0;        // no compensation at all
  double delta_v_vs_ideal = 0.0;      // programmed Sylvester family vs ideal
  double delta_v_vs_trueprog = 0.0;   // vs the true-matrix-programmed family
  CalibrationReport calibration;
  std::string to_json() const;
};

// Acquire every port of the true medium, calibrate, and program through the
// result: random balanced targets for fidelity statistics plus the Sylvester
// family for visibility statistics. The reported `fidelity_measured_mean`
// removes the unobservable reference gauge (per-row reference phases and the
// per-port drift phases) using the true factors, which only tests may know;
// the estimated/raw variants show what calibration alone achieves.
RoundtripReport acquisition_roundtrip(const TransmissionMatrix& tm_true, int m,
                                      int k, const AcquisitionConfig& cfg,
                                      int targets = 16);

}  // namespace lqn
