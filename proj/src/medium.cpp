#include "lqn/medium.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <json.hpp>

#include "lqn/result.hpp"

namespace lqn {

namespace {

CMatrix fill_gaussian(int n_out, int n_in, double sigma_total,
                      RandomStream& stream) {
  CMatrix g(n_out, n_in);
  for (int i = 0; i < n_out; ++i) {
    for (int j = 0; j < n_in; ++j) {
      g(i, j) = stream.cnormal() * sigma_total;
    }
  }
  return g;
}

CMatrix haar_unitary(int n, RandomStream& stream) {
  CMatrix g = fill_gaussian(n, n, 1.0, stream);
  Eigen::HouseholderQR<CMatrix> qr(g);
  CMatrix q = qr.householderQ() * CMatrix::Identity(n, n);
  CMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < n; ++j) {
    Complex d = r(j, j);
    double mod = std::abs(d);
    q.col(j) *= mod > 0.0 ? d / mod : Complex(1.0, 0.0);
  }
  return q;
}

// Geodesic blend of a unitary toward the identity: U^c by fractional powers
// of the eigenphases. c = 0 and c = 1 take exact fast paths.
CMatrix blend_with_identity(const CMatrix& u, double c) {
  const int n = static_cast<int>(u.rows());
  if (c == 0.0) {
    return CMatrix::Identity(n, n);
  }
  if (c == 1.0) {
    return u;
  }
  Eigen::ComplexEigenSolver<CMatrix> eig(u);
  if (eig.info() != Eigen::Success) {
    throw std::runtime_error("eigendecomposition failed in fibre blending");
  }
  CVector powered(n);
  for (int i = 0; i < n; ++i) {
    Complex lambda = eig.eigenvalues()(i);
    double mod = std::abs(lambda);
    double phase = mod > 0.0 ? std::arg(lambda) : 0.0;
    powered(i) = std::polar(1.0, c * phase);
  }
  const CMatrix& vectors = eig.eigenvectors();
  return vectors * powered.asDiagonal() * vectors.adjoint();
}

}  // namespace

Eigen::Block<const CMatrix> TransmissionMatrix::port_block(int port) const {
  if (port < 0 || port >= ports) {
    throw std::invalid_argument("port index out of range");
  }
  const int width = port_width();
  return entries.block(0, port * width, n_out(), width);
}

void TransmissionMatrix::validate() const {
  if (n_out() < 1 || n_in() < 1) {
    throw std::invalid_argument("transmission matrix must be non-empty");
  }
  if (!entries.allFinite()) {
    throw std::invalid_argument("transmission matrix entries must be finite");
  }
  if (ports < 1 || n_in() % ports != 0) {
    throw std::invalid_argument(
        "ports must partition the input columns into equal blocks");
  }
  if (!output_labels.empty() &&
      static_cast<int>(output_labels.size()) != n_out()) {
    throw std::invalid_argument("output labels must cover every row");
  }
}

TransmissionMatrix gen_random_gaussian(int n_out, int n_in,
                                       std::uint64_t seed) {
  if (n_out < 1 || n_in < 1) {
    throw std::invalid_argument("gen_random_gaussian: dimensions must be >= 1");
  }
  RandomStream stream(seed);
  TransmissionMatrix tm;
  // E|T_ij|^2 = 1/n_out, so column norms average 1 and the diagonal of
  // T T^dagger is 1 in expectation.
  tm.entries = fill_gaussian(n_out, n_in, 1.0 / std::sqrt(n_out), stream);
  return tm;
}

TransmissionMatrix gen_random_unitary(int n, std::uint64_t seed) {
  if (n < 1) {
    throw std::invalid_argument("gen_random_unitary: n must be >= 1");
  }
  RandomStream stream(seed);
  TransmissionMatrix tm;
  tm.entries = haar_unitary(n, stream);
  return tm;
}

TransmissionMatrix gen_synthetic_fibre(int n, double coupling,
                                       double loss_spread,
                                       std::uint64_t seed) {
  if (n < 2 || n % 2 != 0) {
    throw std::invalid_argument("gen_synthetic_fibre: n must be even");
  }
  if (!(coupling >= 0.0 && coupling <= 1.0)) {
    throw std::invalid_argument(
        "gen_synthetic_fibre: coupling must lie in [0, 1]");
  }
  if (!(loss_spread >= 0.0)) {
    throw std::invalid_argument(
        "gen_synthetic_fibre: loss_spread must be non-negative");
  }
  RandomStream stream(seed);
  CMatrix u1 = CMatrix::Identity(n, n);
  CMatrix u2 = CMatrix::Identity(n, n);
  if (coupling > 0.0) {
    u1 = blend_with_identity(haar_unitary(n, stream), coupling);
    u2 = blend_with_identity(haar_unitary(n, stream), coupling);
  }
  Eigen::VectorXd amplitudes = Eigen::VectorXd::Ones(n);
  if (loss_spread > 0.0) {
    const double lo = std::max(0.0, 1.0 - loss_spread);
    for (int i = 0; i < n; ++i) {
      amplitudes(i) = lo + (1.0 - lo) * stream.uniform();
    }
    amplitudes /= amplitudes.maxCoeff();
  }
  TransmissionMatrix tm;
  if (coupling == 0.0 && loss_spread == 0.0) {
    tm.entries = CMatrix::Identity(n, n);
  } else {
    tm.entries = u2 * amplitudes.cast<Complex>().asDiagonal() * u1;
  }
  tm.output_labels.resize(n);
  const int half = n / 2;
  for (int i = 0; i < n; ++i) {
    tm.output_labels[i] = {i % half,
                           i < half ? Polarisation::H : Polarisation::V};
  }
  return tm;
}

TransmissionMatrix select_block(const TransmissionMatrix& tm,
                                const std::vector<int>& rows,
                                const std::vector<int>& cols) {
  if (rows.empty() || cols.empty()) {
    throw std::invalid_argument("select_block: index sets must be non-empty");
  }
  for (int r : rows) {
    if (r < 0 || r >= tm.n_out()) {
      throw std::invalid_argument("select_block: row index out of range");
    }
  }
  for (int c : cols) {
    if (c < 0 || c >= tm.n_in()) {
      throw std::invalid_argument("select_block: column index out of range");
    }
  }
  TransmissionMatrix out;
  out.entries.resize(rows.size(), cols.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    for (size_t j = 0; j < cols.size(); ++j) {
      out.entries(i, j) = tm.entries(rows[i], cols[j]);
    }
  }
  bool full_cols = static_cast<int>(cols.size()) == tm.n_in();
  if (full_cols) {
    for (size_t j = 0; j < cols.size(); ++j) {
      if (cols[j] != static_cast<int>(j)) {
        full_cols = false;
        break;
      }
    }
  }
  out.ports = full_cols ? tm.ports : 1;
  if (!tm.output_labels.empty()) {
    out.output_labels.reserve(rows.size());
    for (int r : rows) {
      out.output_labels.push_back(tm.output_labels[r]);
    }
  }
  return out;
}

std::vector<int> rows_with_polarisation(const TransmissionMatrix& tm,
                                        Polarisation pol) {
  if (tm.output_labels.empty()) {
    throw std::invalid_argument("matrix carries no output labels");
  }
  std::vector<int> rows;
  for (int i = 0; i < tm.n_out(); ++i) {
    if (tm.output_labels[i].pol == pol) {
      rows.push_back(i);
    }
  }
  return rows;
}

std::vector<int> cols_with_polarisation(const TransmissionMatrix& tm,
                                        Polarisation pol) {
  if (tm.n_in() % 2 != 0) {
    throw std::invalid_argument(
        "input polarisation convention requires an even column count");
  }
  const int half = tm.n_in() / 2;
  std::vector<int> cols(half);
  const int offset = pol == Polarisation::H ? 0 : half;
  for (int i = 0; i < half; ++i) {
    cols[i] = offset + i;
  }
  return cols;
}

EigenvalueSpectrum transmission_spectrum(const TransmissionMatrix& tm,
                                         int bins) {
  if (bins < 1) {
    throw std::invalid_argument("transmission_spectrum: bins must be >= 1");
  }
  const CMatrix gram = tm.entries.adjoint() * tm.entries;
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(gram);
  if (eig.info() != Eigen::Success) {
    throw std::runtime_error("eigendecomposition failed in spectrum");
  }
  EigenvalueSpectrum spec;
  spec.values.resize(eig.eigenvalues().size());
  for (int i = 0; i < eig.eigenvalues().size(); ++i) {
    // Ascending from the solver; store descending, clamping tiny negatives.
    double v = eig.eigenvalues()(eig.eigenvalues().size() - 1 - i);
    spec.values[i] = v > 0.0 ? v : 0.0;
  }
  double sum = 0.0;
  for (double v : spec.values) {
    sum += v;
  }
  spec.mean = sum / static_cast<double>(spec.values.size());
  if (spec.mean <= 0.0) {
    spec.degenerate = true;
    return spec;
  }
  const double max_ratio = spec.values.front() / spec.mean;
  const double width = max_ratio / bins;
  spec.bin_edges.resize(bins + 1);
  for (int b = 0; b <= bins; ++b) {
    spec.bin_edges[b] = width * b;
  }
  std::vector<double> counts(bins, 0.0);
  for (double v : spec.values) {
    const double ratio = v / spec.mean;
    int b = width > 0.0 ? static_cast<int>(ratio / width) : 0;
    b = std::clamp(b, 0, bins - 1);
    counts[b] += 1.0;
  }
  spec.densities.resize(bins);
  const double total = static_cast<double>(spec.values.size());
  for (int b = 0; b < bins; ++b) {
    spec.densities[b] = counts[b] / (total * width);
  }
  return spec;
}

TimeReversalDeviation time_reversal_deviation(const TransmissionMatrix& tm) {
  const CMatrix prod = tm.entries * tm.entries.adjoint();
  const int n = static_cast<int>(prod.rows());
  TimeReversalDeviation dev;
  double diag_sum = 0.0;
  double off_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    diag_sum += prod(i, i).real();
    for (int j = 0; j < n; ++j) {
      if (i != j) {
        off_sq += std::norm(prod(i, j));
      }
    }
  }
  dev.diag_mean = diag_sum / n;
  dev.offdiag_rms = n > 1 ? std::sqrt(off_sq / (static_cast<double>(n) * n - n))
                          : 0.0;
  return dev;
}

std::string to_tmx_json(const TransmissionMatrix& tm, int port_field) {
  nlohmann::ordered_json j;
  j["n_out"] = tm.n_out();
  j["n_in"] = tm.n_in();
  j["ports"] = tm.ports;
  if (port_field >= 0) {
    j["port"] = port_field;
  }
  if (!tm.output_labels.empty()) {
    nlohmann::ordered_json labels = nlohmann::ordered_json::array();
    for (const auto& label : tm.output_labels) {
      labels.push_back({label.position,
                        label.pol == Polarisation::H ? "H" : "V"});
    }
    j["labels"] = std::move(labels);
  }
  nlohmann::ordered_json re = nlohmann::ordered_json::array();
  nlohmann::ordered_json im = nlohmann::ordered_json::array();
  for (int i = 0; i < tm.n_out(); ++i) {
    for (int c = 0; c < tm.n_in(); ++c) {
      re.push_back(tm.entries(i, c).real());
      im.push_back(tm.entries(i, c).imag());
    }
  }
  j["re"] = std::move(re);
  j["im"] = std::move(im);
  return j.dump(2) + "\n";
}

TransmissionMatrix from_tmx_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("TMX-JSON parse error: ") +
                                e.what());
  }
  for (const char* key : {"n_out", "n_in", "ports", "re", "im"}) {
    if (!j.contains(key)) {
      throw std::invalid_argument(std::string("TMX-JSON missing key: ") + key);
    }
  }
  const int n_out = j.at("n_out").get<int>();
  const int n_in = j.at("n_in").get<int>();
  const int ports = j.at("ports").get<int>();
  if (n_out < 1 || n_in < 1) {
    throw std::invalid_argument("TMX-JSON dimensions must be positive");
  }
  const auto& re = j.at("re");
  const auto& im = j.at("im");
  const size_t expected = static_cast<size_t>(n_out) * n_in;
  if (re.size() != expected || im.size() != expected) {
    throw std::invalid_argument(
        "TMX-JSON coefficient arrays do not match the stated dimensions");
  }
  TransmissionMatrix tm;
  tm.entries.resize(n_out, n_in);
  for (size_t idx = 0; idx < expected; ++idx) {
    const double real = re[idx].get<double>();
    const double imag = im[idx].get<double>();
    if (!std::isfinite(real) || !std::isfinite(imag)) {
      throw std::invalid_argument("TMX-JSON entries must be finite");
    }
    tm.entries(idx / n_in, idx % n_in) = Complex(real, imag);
  }
  tm.ports = ports;
  if (j.contains("labels")) {
    const auto& labels = j.at("labels");
    if (labels.size() != static_cast<size_t>(n_out)) {
      throw std::invalid_argument("TMX-JSON labels must cover every row");
    }
    tm.output_labels.reserve(n_out);
    for (const auto& entry : labels) {
      if (!entry.is_array() || entry.size() != 2) {
        throw std::invalid_argument("TMX-JSON label entries must be pairs");
      }
      const std::string pol = entry[1].get<std::string>();
      if (pol != "H" && pol != "V") {
        throw std::invalid_argument("TMX-JSON polarisation must be H or V");
      }
      tm.output_labels.push_back(
          {entry[0].get<int>(),
           pol == "H" ? Polarisation::H : Polarisation::V});
    }
  }
  tm.validate();
  return tm;
}

void save_tmx(const TransmissionMatrix& tm, const std::string& path) {
  write_text_file(path, to_tmx_json(tm));
}

TransmissionMatrix load_tmx(const std::string& path) {
  return from_tmx_json(read_text_file(path));
}

}  // namespace lqn
