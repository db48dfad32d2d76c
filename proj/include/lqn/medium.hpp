#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lqn/rng.hpp"

namespace lqn {

using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

enum class Polarisation { H, V };

struct OutputLabel {
  int position = 0;
  Polarisation pol = Polarisation::H;
};

// Complex n_out x n_in field-amplitude map of a medium, with a partition of
// the input columns into `ports` contiguous equal blocks and optional
// per-row output labels (position index + polarisation).
struct TransmissionMatrix {
  CMatrix entries;
  int ports = 1;
  std::vector<OutputLabel> output_labels;  // empty, or one per row

  int n_out() const { return static_cast<int>(entries.rows()); }
  int n_in() const { return static_cast<int>(entries.cols()); }
  int port_width() const { return n_in() / ports; }

  // Columns [port*width, (port+1)*width) as a block expression.
  Eigen::Block<const CMatrix> port_block(int port) const;

  // Throws std::invalid_argument if any structural invariant is violated
  // (finite entries, ports divides n_in, labels sized n_out when present).
  void validate() const;
};

// Eigenvalues tau of T^dagger T (squared singular values), descending, with a
// normalized histogram of tau/<tau>. `degenerate` marks an all-zero spectrum
// for which the normalized histogram is undefined.
struct EigenvalueSpectrum {
  std::vector<double> values;
  double mean = 0.0;
  std::vector<double> bin_edges;  // bins+1 edges over [0, max(tau/<tau>)]
  std::vector<double> densities;  // integrates to 1 over the edges
  bool degenerate = false;
};

struct TimeReversalDeviation {
  double offdiag_rms = 0.0;
  double diag_mean = 0.0;
};

// iid complex Gaussian entries, re/im sigma = 1/sqrt(2 n_out) so that column
// norms average 1 and T T^dagger has unit diagonal in expectation.
TransmissionMatrix gen_random_gaussian(int n_out, int n_in, std::uint64_t seed);

// Haar-distributed n x n unitary (QR of a complex Gaussian matrix with the
// R-diagonal phase fix).
TransmissionMatrix gen_random_unitary(int n, std::uint64_t seed);

// Phenomenological multimode-fibre stand-in: U2 * D * U1 with U1, U2 Haar
// unitaries geodesically blended toward identity by `coupling` in [0,1], and
// D diagonal amplitudes drawn uniformly from [max(0, 1-loss_spread), 1] then
// divided by their maximum. Rows and columns are labeled H for the first
// half and V for the second half. n must be even.
TransmissionMatrix gen_synthetic_fibre(int n, double coupling,
                                       double loss_spread, std::uint64_t seed);

// Submatrix with metadata restricted: labels follow the row selection; the
// port partition survives only a full in-order column selection (otherwise
// the result is a single port block).
TransmissionMatrix select_block(const TransmissionMatrix& tm,
                                const std::vector<int>& rows,
                                const std::vector<int>& cols);

// Rows carrying the given polarisation label (requires labels present).
std::vector<int> rows_with_polarisation(const TransmissionMatrix& tm,
                                        Polarisation pol);
// Input columns by the H-first/V-second convention of the fibre generator.
std::vector<int> cols_with_polarisation(const TransmissionMatrix& tm,
                                        Polarisation pol);

EigenvalueSpectrum transmission_spectrum(const TransmissionMatrix& tm,
                                         int bins);

TimeReversalDeviation time_reversal_deviation(const TransmissionMatrix& tm);

// TMX-JSON serialization: {"n_out", "n_in", "ports", "labels"?, "re", "im"}
// with row-major coefficient arrays; readers reject length mismatches and
// non-finite values. `port_field` adds a "port" member when non-negative.
std::string to_tmx_json(const TransmissionMatrix& tm, int port_field = -1);
TransmissionMatrix from_tmx_json(const std::string& text);
void save_tmx(const TransmissionMatrix& tm, const std::string& path);
TransmissionMatrix load_tmx(const std::string& path);

}  // namespace lqn
