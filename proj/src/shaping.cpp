#include "lqn/shaping.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace lqn {

namespace {

// Restriction of one port block to the target rows: k x (n_in/m).
CMatrix target_block(const TransmissionMatrix& tm,
                     const std::vector<int>& target_rows, int port) {
  const auto block = tm.port_block(port);
  CMatrix out(target_rows.size(), block.cols());
  for (size_t i = 0; i < target_rows.size(); ++i) {
    const int r = target_rows[i];
    if (r < 0 || r >= tm.n_out()) {
      throw std::invalid_argument("target row index out of range");
    }
    out.row(i) = block.row(r);
  }
  return out;
}

void check_target_rows(const std::vector<int>& target_rows) {
  if (target_rows.empty()) {
    throw std::invalid_argument("target row set must be non-empty");
  }
}

}  // namespace

void TargetTransform::validate() const {
  if (k() < 1 || m() < 1) {
    throw std::invalid_argument("target transform must be non-empty");
  }
  if (!entries.allFinite()) {
    throw std::invalid_argument("target transform entries must be finite");
  }
  for (int j = 0; j < m(); ++j) {
    if (entries.col(j).norm() == 0.0) {
      throw std::invalid_argument("target transform has an all-zero column");
    }
  }
}

std::vector<TransmissionMatrix> partition_ports(const TransmissionMatrix& tm,
                                                int m) {
  if (m < 1 || tm.n_in() % m != 0) {
    throw std::invalid_argument(
        "port count must divide the number of input columns");
  }
  const int width = tm.n_in() / m;
  std::vector<TransmissionMatrix> blocks;
  blocks.reserve(m);
  for (int j = 0; j < m; ++j) {
    TransmissionMatrix block;
    block.entries = tm.entries.middleCols(j * width, width);
    block.ports = 1;
    block.output_labels = tm.output_labels;
    blocks.push_back(std::move(block));
  }
  return blocks;
}

CVector solve_input_field(const CMatrix& Tj, const CVector& Lj,
                          ModulationConstraint constraint) {
  if (Tj.rows() != Lj.size()) {
    throw std::invalid_argument(
        "target vector length must match the restricted block rows");
  }
  if (Lj.norm() == 0.0) {
    throw std::invalid_argument("target column must not be zero");
  }
  CVector conjugate = Tj.adjoint() * Lj;
  if (constraint == ModulationConstraint::phase_only) {
    const double amplitude = 1.0 / std::sqrt(static_cast<double>(Tj.cols()));
    for (Eigen::Index e = 0; e < conjugate.size(); ++e) {
      const double mod = std::abs(conjugate(e));
      conjugate(e) = mod > 0.0 ? conjugate(e) / mod * amplitude
                               : Complex(amplitude, 0.0);
    }
    return conjugate;
  }
  const double norm = conjugate.norm();
  if (norm == 0.0) {
    throw std::invalid_argument(
        "degenerate inverse solution: target is orthogonal to the block");
  }
  return conjugate / norm;
}

CMatrix effective_network(const TransmissionMatrix& tm,
                          const std::vector<int>& target_rows,
                          const std::vector<CVector>& fields) {
  check_target_rows(target_rows);
  if (static_cast<int>(fields.size()) != tm.ports) {
    throw std::invalid_argument("one field vector per port is required");
  }
  CMatrix realized(target_rows.size(), fields.size());
  for (int j = 0; j < tm.ports; ++j) {
    if (fields[j].size() != tm.port_width()) {
      throw std::invalid_argument("field length must match the port width");
    }
    realized.col(j) = target_block(tm, target_rows, j) * fields[j];
  }
  return realized;
}

FidelityResult fidelity(const TargetTransform& target,
                        const CMatrix& realized) {
  target.validate();
  if (realized.rows() != target.entries.rows() ||
      realized.cols() != target.entries.cols()) {
    throw std::invalid_argument("fidelity: shapes must match");
  }
  const double elements = static_cast<double>(target.entries.size());
  const double mean_mod = target.entries.cwiseAbs().sum() / elements;
  const CMatrix normalized = target.entries / mean_mod;
  FidelityResult out;
  const double realized_power = realized.squaredNorm();
  if (realized_power == 0.0) {
    out.value = 1.0 - normalized.cwiseAbs().sum() / elements;
    out.degenerate = true;
    return out;
  }
  // Least-squares global alignment c = <Lt, L>/<Lt, Lt>, then l1 deviation.
  const Complex align =
      (realized.conjugate().cwiseProduct(normalized)).sum() / realized_power;
  out.value = 1.0 - (normalized - align * realized).cwiseAbs().sum() / elements;
  return out;
}

Transmittance transmittance(const TransmissionMatrix& tm,
                            const std::vector<int>& target_rows, int port,
                            const CVector& field) {
  check_target_rows(target_rows);
  if (field.size() != tm.port_width()) {
    throw std::invalid_argument("field length must match the port width");
  }
  if (std::abs(field.norm() - 1.0) > 1e-6) {
    throw std::invalid_argument("transmittance expects a unit-norm field");
  }
  const CVector transmitted = tm.port_block(port) * field;
  const double total = transmitted.squaredNorm();
  Transmittance out;
  if (total <= 0.0) {
    out.value = std::numeric_limits<double>::quiet_NaN();
    out.defined = false;
    return out;
  }
  double targeted = 0.0;
  for (int r : target_rows) {
    if (r < 0 || r >= tm.n_out()) {
      throw std::invalid_argument("target row index out of range");
    }
    targeted += std::norm(transmitted(r));
  }
  out.value = targeted / total;
  return out;
}

ProgrammedNetwork program_network(const TransmissionMatrix& tm,
                                  const std::vector<int>& target_rows,
                                  const TargetTransform& target,
                                  ModulationConstraint constraint) {
  tm.validate();
  target.validate();
  check_target_rows(target_rows);
  if (target.m() != tm.ports) {
    throw std::invalid_argument(
        "target must have one column per medium port");
  }
  if (target.k() != static_cast<int>(target_rows.size())) {
    throw std::invalid_argument(
        "target must have one row per selected output");
  }
  ProgrammedNetwork net;
  net.target_rows = target_rows;
  net.input_fields.reserve(tm.ports);
  for (int j = 0; j < tm.ports; ++j) {
    const CMatrix block = target_block(tm, target_rows, j);
    net.input_fields.push_back(
        solve_input_field(block, target.entries.col(j), constraint));
  }
  net.effective = effective_network(tm, target_rows, net.input_fields);
  net.fidelity = fidelity(target, net.effective).value;
  net.transmittance.reserve(tm.ports);
  for (int j = 0; j < tm.ports; ++j) {
    net.transmittance.push_back(
        transmittance(tm, target_rows, j, net.input_fields[j]).value);
  }
  return net;
}

TargetTransform sample_target(int k, int m, RandomStream& rng) {
  if (k < 1 || m < 1) {
    throw std::invalid_argument("target dimensions must be >= 1");
  }
  TargetTransform target;
  target.entries.resize(k, m);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < m; ++j) {
      target.entries(i, j) = rng.cnormal();
    }
  }
  for (int j = 0; j < m; ++j) {
    const double norm = target.entries.col(j).norm();
    if (norm > 0.0) {
      target.entries.col(j) /= norm;
    } else {
      target.entries(0, j) = Complex(1.0, 0.0);
    }
  }
  return target;
}

namespace {

TransmissionMatrix subsample_file_tm(const TransmissionMatrix& source, int n,
                                     int m, RandomStream& rng) {
  if (source.n_out() < n || source.n_in() < n) {
    throw std::invalid_argument(
        "loaded matrix is smaller than the requested subsample");
  }
  // Partial Fisher-Yates: the first n entries of a shuffled index range,
  // then sorted so port blocks stay contiguous in the original order.
  auto pick = [&rng, n](int bound) {
    std::vector<int> indices(bound);
    std::iota(indices.begin(), indices.end(), 0);
    for (int i = 0; i < n; ++i) {
      const int j =
          i + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(
                  bound - i)));
      std::swap(indices[i], indices[j]);
    }
    std::vector<int> chosen(indices.begin(), indices.begin() + n);
    std::sort(chosen.begin(), chosen.end());
    return chosen;
  };
  const std::vector<int> rows = pick(source.n_out());
  const std::vector<int> cols = pick(source.n_in());
  TransmissionMatrix sub = select_block(source, rows, cols);
  sub.ports = m;
  return sub;
}

}  // namespace

ExperimentResult scaling_experiment(const ScalingConfig& cfg) {
  if (cfg.trials < 1) {
    throw std::invalid_argument("scaling_experiment: trials must be >= 1");
  }
  if (cfg.n_list.empty()) {
    throw std::invalid_argument("scaling_experiment: n list must be non-empty");
  }
  if (cfg.model == MediumModel::FILE && cfg.file_tm == nullptr) {
    throw std::invalid_argument(
        "scaling_experiment: FILE model requires a loaded matrix");
  }
  for (int n : cfg.n_list) {
    if (n < 1 || n % cfg.m != 0) {
      throw std::invalid_argument(
          "scaling_experiment: every n must be positive and divisible by m");
    }
  }
  ExperimentResult result;
  result.add_meta("tool_version", std::string(kToolVersion));
  result.add_meta("experiment", std::string("fidelity-scaling"));
  result.add_meta("model", cfg.model == MediumModel::RM    ? std::string("RM")
                           : cfg.model == MediumModel::RUM ? std::string("RUM")
                                                           : std::string("FILE"));
  result.add_meta("constraint",
                  cfg.constraint == ModulationConstraint::full_complex
                      ? std::string("full_complex")
                      : std::string("phase_only"));
  result.add_meta("seed", static_cast<long long>(cfg.seed));
  result.columns = {"n", "m", "k", "trials", "fidelity_mean",
                    "fidelity_std", "transmittance_mean"};
  std::vector<int> target_rows(cfg.k);
  std::iota(target_rows.begin(), target_rows.end(), 0);
  for (size_t idx = 0; idx < cfg.n_list.size(); ++idx) {
    const int n = cfg.n_list[idx];
    double fid_sum = 0.0;
    double fid_sq = 0.0;
    double gamma_sum = 0.0;
    long long gamma_count = 0;
    for (int t = 0; t < cfg.trials; ++t) {
      // Per-trial derived seeds keep trials independent of execution order.
      const std::uint64_t trial_seed =
          derive_seed(derive_seed(cfg.seed, static_cast<std::uint64_t>(n)),
                      static_cast<std::uint64_t>(t));
      RandomStream rng(derive_seed(trial_seed, 2));
      TransmissionMatrix tm;
      switch (cfg.model) {
        case MediumModel::RM:
          tm = gen_random_gaussian(n, n, derive_seed(trial_seed, 1));
          break;
        case MediumModel::RUM:
          tm = gen_random_unitary(n, derive_seed(trial_seed, 1));
          break;
        case MediumModel::FILE:
          tm = subsample_file_tm(*cfg.file_tm, n, cfg.m, rng);
          break;
      }
      tm.ports = cfg.m;
      const TargetTransform target = sample_target(cfg.k, cfg.m, rng);
      const ProgrammedNetwork net =
          program_network(tm, target_rows, target, cfg.constraint);
      fid_sum += net.fidelity;
      fid_sq += net.fidelity * net.fidelity;
      for (double g : net.transmittance) {
        if (std::isfinite(g)) {
          gamma_sum += g;
          ++gamma_count;
        }
      }
    }
    const double mean = fid_sum / cfg.trials;
    const double variance = std::max(0.0, fid_sq / cfg.trials - mean * mean);
    result.rows.push_back({static_cast<double>(n), static_cast<double>(cfg.m),
                           static_cast<double>(cfg.k),
                           static_cast<double>(cfg.trials), mean,
                           std::sqrt(variance),
                           gamma_count ? gamma_sum / gamma_count : 0.0});
  }
  return result;
}

}  // namespace lqn
