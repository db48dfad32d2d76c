#include "lqn/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "lqn/rng.hpp"

namespace lqn {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Internal sub-stream tags hung off the acquisition seed. All ports share the
// reference speckle stream; each port has its own drift and shot-noise stream.
constexpr std::uint64_t kTagReference = 101;
constexpr std::uint64_t kTagDriftBase = 200;
constexpr std::uint64_t kTagNoiseBase = 300;
constexpr std::uint64_t kTagTargets = 400;

CVector reference_speckle(const AcquisitionConfig& cfg, int n_out) {
  RandomStream rng(derive_seed(cfg.seed, kTagReference));
  CVector r(n_out);
  for (int i = 0; i < n_out; ++i) {
    r(i) = cfg.reference_strength * rng.cnormal();
  }
  return r;
}

Complex port_drift(const AcquisitionConfig& cfg, int port) {
  if (port == 0) return Complex(1.0, 0.0);
  RandomStream rng(derive_seed(cfg.seed, kTagDriftBase + static_cast<std::uint64_t>(port)));
  const double modulus = std::exp(0.15 * rng.normal());
  const double phase = rng.uniform(0.0, 2.0 * kPi);
  return modulus * std::exp(Complex(0.0, phase));
}

double noisy_intensity(double intensity, double budget, RandomStream& noise) {
  if (!std::isfinite(budget)) return intensity;
  return static_cast<double>(noise.poisson(budget * intensity)) / budget;
}

// Unit-norm programming field for one measured port block and one target
// column (phase conjugation of the block against the target).
CVector conjugate_field(const CMatrix& block, const CVector& target) {
  CVector field = block.adjoint() * target;
  const double norm = field.norm();
  if (norm < 1e-15) {
    throw std::runtime_error("calibration failed: degenerate programming field");
  }
  return field / norm;
}

std::complex<double> phase_factor(double phase) {
  return std::exp(Complex(0.0, phase));
}

// Mean absolute visibility difference between a model k x 2 network and a
// measured visibility row set, over entries defined in both.
double visibility_mismatch(const CMatrix& model,
                           const std::vector<double>& v_meas,
                           const std::vector<bool>& meas_defined,
                           const std::vector<std::pair<int, int>>& pairs) {
  double sum = 0.0;
  int count = 0;
  for (std::size_t idx = 0; idx < pairs.size(); ++idx) {
    if (!meas_defined[idx]) continue;
    const auto [i, j] = pairs[idx];
    const double pd = std::norm(model(i, 0) * model(j, 1)) +
                      std::norm(model(j, 0) * model(i, 1));
    if (pd <= 1e-14) continue;
    const double pi_prob = std::norm(model(i, 0) * model(j, 1) +
                                     model(j, 0) * model(i, 1));
    sum += std::abs((pd - pi_prob) / pd - v_meas[idx]);
    ++count;
  }
  return count > 0 ? sum / count : 0.0;
}

}  // namespace

void AcquisitionConfig::validate() const {
  if (phase_steps < 3) {
    throw std::invalid_argument(
        "phase_steps must be >= 3: retrieving one complex harmonic from "
        "intensity frames needs at least three quadrature points");
  }
  if (!(photon_budget > 0.0)) {
    throw std::invalid_argument("photon_budget must be positive (infinity = noiseless)");
  }
  if (!(reference_strength > 0.0)) {
    throw std::invalid_argument("reference_strength must be positive");
  }
}

PortMeasurement acquire_port(const TransmissionMatrix& tm_true, int port,
                             const std::vector<int>& target_rows,
                             const AcquisitionConfig& cfg) {
  cfg.validate();
  if (port < 0 || port >= tm_true.ports) {
    throw std::invalid_argument("acquisition port index out of range");
  }
  if (target_rows.empty()) {
    throw std::invalid_argument("acquisition needs at least one target row");
  }
  for (int row : target_rows) {
    if (row < 0 || row >= tm_true.n_out()) {
      throw std::invalid_argument("acquisition target row out of range");
    }
  }

  const CVector r = reference_speckle(cfg, tm_true.n_out());
  const Complex beta = port_drift(cfg, port);
  RandomStream noise(derive_seed(cfg.seed, kTagNoiseBase + static_cast<std::uint64_t>(port)));

  const int k = static_cast<int>(target_rows.size());
  const int width = tm_true.port_width();
  const auto block = tm_true.port_block(port);
  const int steps = cfg.phase_steps;

  // Reference-only frame (one per target row), used for row normalization.
  Eigen::VectorXd ref_frame(k);
  for (int a = 0; a < k; ++a) {
    const Complex ref = beta * r(target_rows[static_cast<std::size_t>(a)]);
    ref_frame(a) = noisy_intensity(std::norm(ref), cfg.photon_budget, noise);
  }

  PortMeasurement out;
  out.port_index = port;
  out.reference_factor_true = beta;
  out.matrix.resize(k, width);
  for (int e = 0; e < width; ++e) {
    for (int a = 0; a < k; ++a) {
      const Complex ref = beta * r(target_rows[static_cast<std::size_t>(a)]);
      const Complex t = block(target_rows[static_cast<std::size_t>(a)], e);
      Complex estimate(0.0, 0.0);
      for (int p = 0; p < steps; ++p) {
        const Complex w = phase_factor(2.0 * kPi * p / steps);
        const double intensity =
            noisy_intensity(std::norm(ref + w * t), cfg.photon_budget, noise);
        estimate += intensity * std::conj(w);
      }
      out.matrix(a, e) = estimate / static_cast<double>(steps);
    }
  }
  if (cfg.normalize_rows) {
    for (int a = 0; a < k; ++a) {
      const double scale = std::sqrt(std::max(ref_frame(a), 1e-12));
      out.matrix.row(a) /= scale;
    }
  }
  return out;
}

CalibrationOutput calibrate_ports(const std::vector<PortMeasurement>& ports,
                                  const CalibrationOracle& oracle) {
  if (ports.size() < 2) {
    throw std::invalid_argument("calibration needs at least two port measurements");
  }
  const int m = static_cast<int>(ports.size());
  const int k = static_cast<int>(ports.front().matrix.rows());
  for (const PortMeasurement& pm : ports) {
    if (pm.matrix.rows() != k || pm.matrix.cols() != ports.front().matrix.cols()) {
      throw std::invalid_argument("port measurements must share one shape");
    }
  }
  if (!oracle) {
    throw std::invalid_argument("calibration oracle must be callable");
  }

  // Uniform target column: equal weight on every target row.
  CVector uniform = CVector::Constant(k, Complex(1.0, 0.0)) / std::sqrt(double(k));

  std::vector<CVector> fields(static_cast<std::size_t>(m));
  std::vector<CVector> uniform_fields(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) {
    uniform_fields[static_cast<std::size_t>(j)] =
        conjugate_field(ports[static_cast<std::size_t>(j)].matrix, uniform);
  }

  CalibrationReport report;
  report.stage1_modulus.assign(static_cast<std::size_t>(m), 1.0);
  report.stage2_phase.assign(static_cast<std::size_t>(m), 0.0);
  report.factors.assign(static_cast<std::size_t>(m), Complex(1.0, 0.0));

  // Stage 1: per-port modulus from singles ratios. Feed each port alone with
  // its uniform-target field; predicted intensities from the measurement
  // exceed the observed ones by the squared port factor modulus.
  for (int j = 0; j < m; ++j) {
    for (auto& f : fields) f.resize(0);
    fields[static_cast<std::size_t>(j)] = uniform_fields[static_cast<std::size_t>(j)];
    const OracleCounts counts = oracle(fields, 1.0);
    if (static_cast<int>(counts.singles.size()) != k) {
      throw std::runtime_error("calibration failed: oracle singles arity mismatch");
    }
    const CVector predicted = ports[static_cast<std::size_t>(j)].matrix *
                              uniform_fields[static_cast<std::size_t>(j)];
    double ratio_sum = 0.0;
    int ratio_count = 0;
    for (int i = 0; i < k; ++i) {
      const double observed = counts.singles[static_cast<std::size_t>(i)];
      if (observed <= 1e-30) continue;
      ratio_sum += std::norm(predicted(i)) / observed;
      ++ratio_count;
    }
    if (ratio_count == 0) {
      throw std::runtime_error("calibration failed: all singles vanished for a port");
    }
    report.stage1_modulus[static_cast<std::size_t>(j)] = std::sqrt(ratio_sum / ratio_count);
    if (!(report.stage1_modulus[static_cast<std::size_t>(j)] > 1e-12)) {
      throw std::runtime_error("calibration failed: degenerate port modulus estimate");
    }
  }

  // Stage 2: relative phase of each port against port 0 by scalar
  // minimization of the visibility mismatch of the uniform network. The
  // visibility pattern is invariant under per-column phases, so a flat
  // objective (range below 1e-12) certifies that no observable inter-port
  // scalar error remains; the phase is then pinned to zero, which also makes
  // recalibration idempotent.
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < k; ++i) {
    for (int j2 = i + 1; j2 < k; ++j2) pairs.emplace_back(i, j2);
  }
  double residual_sum = 0.0;
  int residual_count = 0;
  bool any_flat = false;
  for (int j = 1; j < m; ++j) {
    for (auto& f : fields) f.resize(0);
    fields[0] = uniform_fields[0];
    fields[static_cast<std::size_t>(j)] = uniform_fields[static_cast<std::size_t>(j)];
    const OracleCounts indist = oracle(fields, 1.0);
    const OracleCounts dist = oracle(fields, 0.0);
    if (indist.coincidences.k != k || dist.coincidences.k != k) {
      throw std::runtime_error("calibration failed: oracle coincidence arity mismatch");
    }
    std::vector<double> v_meas(pairs.size(), 0.0);
    std::vector<bool> v_defined(pairs.size(), false);
    for (std::size_t idx = 0; idx < pairs.size(); ++idx) {
      const auto [a, b] = pairs[idx];
      const double pd = dist.coincidences.prob(a, b);
      if (pd > 1e-14) {
        v_meas[idx] = (pd - indist.coincidences.prob(a, b)) / pd;
        v_defined[idx] = true;
      }
    }

    const CVector col0 = ports[0].matrix * uniform_fields[0] /
                         report.stage1_modulus[0];
    const CVector colj = ports[static_cast<std::size_t>(j)].matrix *
                         uniform_fields[static_cast<std::size_t>(j)] /
                         report.stage1_modulus[static_cast<std::size_t>(j)];
    const auto objective = [&](double chi) {
      CMatrix model(k, 2);
      model.col(0) = col0;
      model.col(1) = phase_factor(chi) * colj;
      return visibility_mismatch(model, v_meas, v_defined, pairs);
    };

    constexpr int kGrid = 64;
    double best_chi = 0.0;
    double best_val = objective(0.0);
    double lo_val = best_val, hi_val = best_val;
    for (int g = 1; g < kGrid; ++g) {
      const double chi = 2.0 * kPi * g / kGrid;
      const double val = objective(chi);
      lo_val = std::min(lo_val, val);
      hi_val = std::max(hi_val, val);
      if (val < best_val) {
        best_val = val;
        best_chi = chi;
      }
    }
    report.objective_range = std::max(report.objective_range, hi_val - lo_val);
    double chosen = 0.0;
    if (hi_val - lo_val < 1e-12) {
      any_flat = true;
      residual_sum += objective(0.0);
    } else {
      // Golden-section refinement around the best grid point.
      const double golden = 0.5 * (std::sqrt(5.0) - 1.0);
      double a = best_chi - 2.0 * kPi / kGrid;
      double b = best_chi + 2.0 * kPi / kGrid;
      double x1 = b - golden * (b - a);
      double x2 = a + golden * (b - a);
      double f1 = objective(x1);
      double f2 = objective(x2);
      for (int iter = 0; iter < 80; ++iter) {
        if (f1 < f2) {
          b = x2;
          x2 = x1;
          f2 = f1;
          x1 = b - golden * (b - a);
          f1 = objective(x1);
        } else {
          a = x1;
          x1 = x2;
          f1 = f2;
          x2 = a + golden * (b - a);
          f2 = objective(x2);
        }
      }
      chosen = std::remainder(0.5 * (a + b), 2.0 * kPi);
      residual_sum += objective(chosen);
    }
    report.stage2_phase[static_cast<std::size_t>(j)] = chosen;
    ++residual_count;
  }
  report.phase_objective_flat = any_flat;
  report.residual_delta_v = residual_count > 0 ? residual_sum / residual_count : 0.0;

  // Apply the corrections: each port block divided by its relative factor,
  // port 0 left untouched (the global factor is unobservable).
  CalibrationOutput output;
  const int width = static_cast<int>(ports.front().matrix.cols());
  output.calibrated.entries.resize(k, width * m);
  for (int j = 0; j < m; ++j) {
    const double rel_mod = report.stage1_modulus[static_cast<std::size_t>(j)] /
                           report.stage1_modulus[0];
    const Complex factor = rel_mod * phase_factor(report.stage2_phase[static_cast<std::size_t>(j)]);
    report.factors[static_cast<std::size_t>(j)] = factor;
    output.calibrated.entries.block(0, j * width, k, width) =
        ports[static_cast<std::size_t>(j)].matrix / factor;
  }
  output.calibrated.ports = m;
  output.calibrated.output_labels.resize(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    output.calibrated.output_labels[static_cast<std::size_t>(i)] = {i, Polarisation::H};
  }
  output.report = report;
  return output;
}

std::string CalibrationReport::to_json() const {
  std::ostringstream out;
  out << "{\"stage1_factor\":[";
  for (std::size_t j = 0; j < stage1_modulus.size(); ++j) {
    if (j) out << ",";
    out << format_double(stage1_modulus[j]);
  }
  out << "],\"stage2_phase\":[";
  for (std::size_t j = 0; j < stage2_phase.size(); ++j) {
    if (j) out << ",";
    out << format_double(stage2_phase[j]);
  }
  out << "],\"residual_delta_v\":" << format_double(residual_delta_v) << "}";
  return out.str();
}

RoundtripReport acquisition_roundtrip(const TransmissionMatrix& tm_true, int m,
                                      int k, const AcquisitionConfig& cfg,
                                      int targets) {
  cfg.validate();
  if (m < 2 || tm_true.ports != m) {
    throw std::invalid_argument("roundtrip needs a medium with ports = m >= 2");
  }
  if (k < 2 || k > tm_true.n_out()) {
    throw std::invalid_argument("roundtrip target count out of range");
  }
  if (targets < 1) {
    throw std::invalid_argument("roundtrip needs at least one random target");
  }

  std::vector<int> target_rows(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) target_rows[static_cast<std::size_t>(i)] = i;

  // Acquire every port against the same target rows.
  std::vector<PortMeasurement> measurements;
  measurements.reserve(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) {
    measurements.push_back(acquire_port(tm_true, j, target_rows, cfg));
  }

  // Noiseless physical oracle backed by the true medium: coherent singles of
  // all injected fields, coincidences for exactly two injected photons.
  const auto oracle = [&](const std::vector<CVector>& fields,
                          double x) -> OracleCounts {
    OracleCounts counts;
    CVector sum = CVector::Zero(tm_true.n_out());
    std::vector<CVector> realized;
    for (int j = 0; j < m; ++j) {
      const CVector& f = fields[static_cast<std::size_t>(j)];
      if (f.size() == 0) continue;
      if (f.size() != tm_true.port_width()) {
        throw std::invalid_argument("oracle field width mismatch");
      }
      const CVector column = tm_true.port_block(j) * f;
      sum += column;
      realized.push_back(column);
    }
    counts.singles.resize(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
      counts.singles[static_cast<std::size_t>(i)] =
          std::norm(sum(target_rows[static_cast<std::size_t>(i)]));
    }
    if (realized.size() == 2) {
      CMatrix pair_net(k, 2);
      for (int i = 0; i < k; ++i) {
        pair_net(i, 0) = realized[0](target_rows[static_cast<std::size_t>(i)]);
        pair_net(i, 1) = realized[1](target_rows[static_cast<std::size_t>(i)]);
      }
      TwoPhotonInput input;
      input.x = x;
      counts.coincidences = two_photon_distribution(pair_net, input);
    }
    return counts;
  };

  const CalibrationOutput calibrated = calibrate_ports(measurements, oracle);

  // Gauge factors known only to the harness: the per-row reference phases and
  // the per-port drift phases (composed with the applied corrections).
  const CVector r = reference_speckle(cfg, tm_true.n_out());
  std::vector<Complex> column_gauge(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) {
    const Complex beta = measurements[static_cast<std::size_t>(j)].reference_factor_true;
    const Complex applied = calibrated.report.factors[static_cast<std::size_t>(j)];
    // Programming from the corrected block carries e^{i(arg beta + arg g)} on
    // the realized column; compensate with its conjugate.
    column_gauge[static_cast<std::size_t>(j)] =
        std::exp(Complex(0.0, -(std::arg(beta) + std::arg(applied))));
  }

  std::vector<int> all_cols(static_cast<std::size_t>(tm_true.n_in()));
  std::iota(all_cols.begin(), all_cols.end(), 0);
  const TransmissionMatrix tm_block = select_block(tm_true, target_rows, all_cols);

  const auto program_from = [&](const CMatrix& estimate,
                                const TargetTransform& target) {
    std::vector<CVector> fields(static_cast<std::size_t>(m));
    const int width = static_cast<int>(estimate.cols()) / m;
    for (int j = 0; j < m; ++j) {
      fields[static_cast<std::size_t>(j)] = conjugate_field(
          estimate.block(0, j * width, k, width), target.entries.col(j));
    }
    CMatrix realized(k, m);
    for (int j = 0; j < m; ++j) {
      const CVector col =
          tm_true.port_block(j) * fields[static_cast<std::size_t>(j)];
      for (int i = 0; i < k; ++i) {
        realized(i, j) = col(target_rows[static_cast<std::size_t>(i)]);
      }
    }
    return realized;
  };

  RoundtripReport report;
  report.calibration = calibrated.report;

  RandomStream target_rng(derive_seed(cfg.seed, kTagTargets));
  double sum_true = 0.0, sum_meas = 0.0, sum_gap = 0.0, max_gap = 0.0;
  double sum_est = 0.0, sum_raw = 0.0;
  CMatrix raw_concat(k, tm_true.n_in());
  for (int j = 0; j < m; ++j) {
    raw_concat.block(0, j * tm_true.port_width(), k, tm_true.port_width()) =
        measurements[static_cast<std::size_t>(j)].matrix;
  }
  for (int trial = 0; trial < targets; ++trial) {
    const TargetTransform target = sample_target(k, m, target_rng);

    const ProgrammedNetwork truth = program_network(
        tm_block, target_rows, target, ModulationConstraint::full_complex);
    sum_true += truth.fidelity;

    const CMatrix realized_raw = program_from(raw_concat, target);
    const CMatrix realized_cal = program_from(calibrated.calibrated.entries, target);

    CMatrix realized_comp = realized_cal;
    for (int j = 0; j < m; ++j) {
      realized_comp.col(j) *= column_gauge[static_cast<std::size_t>(j)];
    }
    for (int i = 0; i < k; ++i) {
      const Complex ri = r(target_rows[static_cast<std::size_t>(i)]);
      realized_comp.row(i) *= std::exp(Complex(0.0, -std::arg(ri)));
    }

    const double f_meas = fidelity(target, realized_comp).value;
    const double f_true_val = truth.fidelity;
    sum_meas += f_meas;
    const double gap = f_meas - f_true_val;
    sum_gap += gap;
    max_gap = std::max(max_gap, std::abs(gap));
    sum_est += fidelity(target, realized_cal).value;
    sum_raw += fidelity(target, realized_raw).value;
  }
  const double denom = static_cast<double>(targets);
  report.fidelity_true_mean = sum_true / denom;
  report.fidelity_measured_mean = sum_meas / denom;
  report.fidelity_gap_mean = sum_gap / denom;
  report.fidelity_gap_max_abs = max_gap;
  report.fidelity_estimated_mean = sum_est / denom;
  report.fidelity_raw_mean = sum_raw / denom;

  // Visibility round-trip: program the Sylvester column pairs through the
  // calibrated estimate and through the true matrix, realize both through the
  // true medium, and compare to the ideal family. Visibilities are invariant
  // under the reference gauge, so no compensation applies here. Defined for
  // the four-target geometry only.
  if (k != 4) {
    report.delta_v_vs_ideal = std::numeric_limits<double>::quiet_NaN();
    report.delta_v_vs_trueprog = std::numeric_limits<double>::quiet_NaN();
    return report;
  }
  const CMatrix sylvester = sylvester4();
  const NetworkFamily ideal = family_of(sylvester);
  NetworkFamily measured_fam, trueprog_fam;
  measured_fam.input_pairs = ideal.input_pairs;
  trueprog_fam.input_pairs = ideal.input_pairs;
  for (const auto& [p, q] : ideal.input_pairs) {
    TargetTransform pair_target;
    pair_target.entries.resize(k, 2);
    pair_target.entries.col(0) = sylvester.col(p).head(k);
    pair_target.entries.col(1) = sylvester.col(q).head(k);
    measured_fam.networks.push_back(
        program_from(calibrated.calibrated.entries, pair_target));
    trueprog_fam.networks.push_back(program_from(
        CMatrix(tm_block.entries), pair_target));
  }
  report.delta_v_vs_ideal = visibility_pattern(measured_fam, ideal).delta_v;
  report.delta_v_vs_trueprog =
      visibility_pattern(measured_fam, trueprog_fam).delta_v;
  return report;
}

std::string RoundtripReport::to_json() const {
  std::ostringstream out;
  // The first three keys are the headline summary; the rest break the same
  // quantities down by gauge and comparison baseline.
  out << "{\"programming_fidelity\":" << format_double(fidelity_measured_mean)
      << ",\"delta_v\":" << format_double(delta_v_vs_ideal)
      << ",\"vs_ground_truth\":" << format_double(fidelity_gap_mean)
      << ",\"fidelity_true_mean\":" << format_double(fidelity_true_mean)
      << ",\"fidelity_measured_mean\":" << format_double(fidelity_measured_mean)
      << ",\"fidelity_gap_mean\":" << format_double(fidelity_gap_mean)
      << ",\"fidelity_gap_max_abs\":" << format_double(fidelity_gap_max_abs)
      << ",\"fidelity_estimated_mean\":" << format_double(fidelity_estimated_mean)
      << ",\"fidelity_raw_mean\":" << format_double(fidelity_raw_mean)
      << ",\"delta_v_vs_ideal\":" << format_double(delta_v_vs_ideal)
      << ",\"delta_v_vs_trueprog\":" << format_double(delta_v_vs_trueprog)
      << ",\"calibration\":" << calibration.to_json() << "}";
  return out.str();
}

}  // namespace lqn
