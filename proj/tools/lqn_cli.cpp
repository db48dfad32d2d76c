// lqn — scenario runner for the linear quantum-optical network simulator.
//
// Every subcommand is deterministic in (parameters, seed) and emits CSV (with
// `# key=value` metadata lines) or a JSON mirror. A JSON config file may
// supply any flag value; flags given on the command line win. Unknown config
// keys are rejected.
//
// Exit codes: 0 success, 1 runtime/I-O failure, 2 usage error, 3 validation
// failure.

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lqn/acquisition.hpp"
#include "lqn/medium.hpp"
#include "lqn/photonics.hpp"
#include "lqn/result.hpp"
#include "lqn/rng.hpp"
#include "lqn/shaping.hpp"
#include "lqn/validate.hpp"

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;
constexpr int kExitValidation = 3;

// ---------------------------------------------------------------------------
// Config-file layer: binds JSON keys to already-registered CLI options so the
// file can fill in anything the command line left at its default.

class ConfigLayer {
 public:
  void bind(CLI::Option* opt, std::string key,
            std::function<void(const nlohmann::json&)> apply) {
    entries_[std::move(key)] = {opt, std::move(apply)};
  }

  void apply_file(const std::string& path) const {
    nlohmann::json doc = nlohmann::json::parse(lqn::read_text_file(path));
    if (!doc.is_object()) {
      throw std::invalid_argument("config file must hold a JSON object: " +
                                  path);
    }
    for (const auto& [key, value] : doc.items()) {
      const auto it = entries_.find(key);
      if (it == entries_.end()) {
        throw std::invalid_argument("unknown config key '" + key + "' in " +
                                    path);
      }
      if (it->second.first->count() == 0) {
        it->second.second(value);
      }
    }
  }

 private:
  std::map<std::string,
           std::pair<CLI::Option*, std::function<void(const nlohmann::json&)>>>
      entries_;
};

template <typename T>
void expect_number(const nlohmann::json& v, const std::string& key, T& out) {
  if (!v.is_number()) {
    throw std::invalid_argument("config key '" + key + "' must be a number");
  }
  out = v.get<T>();
}

void bind_value(ConfigLayer& layer, CLI::Option* opt, const std::string& key,
                int& ref) {
  layer.bind(opt, key, [key, &ref](const nlohmann::json& v) {
    expect_number(v, key, ref);
  });
}

void bind_value(ConfigLayer& layer, CLI::Option* opt, const std::string& key,
                double& ref) {
  layer.bind(opt, key, [key, &ref](const nlohmann::json& v) {
    expect_number(v, key, ref);
  });
}

void bind_value(ConfigLayer& layer, CLI::Option* opt, const std::string& key,
                std::uint64_t& ref) {
  layer.bind(opt, key, [key, &ref](const nlohmann::json& v) {
    expect_number(v, key, ref);
  });
}

void bind_value(ConfigLayer& layer, CLI::Option* opt, const std::string& key,
                bool& ref) {
  layer.bind(opt, key, [key, &ref](const nlohmann::json& v) {
    if (!v.is_boolean()) {
      throw std::invalid_argument("config key '" + key + "' must be a boolean");
    }
    ref = v.get<bool>();
  });
}

void bind_value(ConfigLayer& layer, CLI::Option* opt, const std::string& key,
                std::string& ref) {
  layer.bind(opt, key, [key, &ref](const nlohmann::json& v) {
    if (v.is_string()) {
      ref = v.get<std::string>();
    } else if (v.is_array()) {
      // Lists (e.g. "n": [64, 128]) are accepted for comma-list options.
      std::ostringstream joined;
      bool first = true;
      for (const auto& item : v) {
        if (!item.is_number()) {
          throw std::invalid_argument("config key '" + key +
                                      "' must be a string or number array");
        }
        if (!first) joined << ",";
        first = false;
        joined << item.get<long long>();
      }
      ref = joined.str();
    } else {
      throw std::invalid_argument("config key '" + key +
                                  "' must be a string or number array");
    }
  });
}

// ---------------------------------------------------------------------------
// Shared flags.

struct Common {
  std::uint64_t seed = 0;
  std::string out;
  std::string format = "csv";
  std::string config;
};

void add_common(CLI::App* sub, Common& c, ConfigLayer& layer) {
  bind_value(layer, sub->add_option("--seed", c.seed, "RNG seed"), "seed",
             c.seed);
  bind_value(layer,
             sub->add_option("--out", c.out, "Output file (default: stdout)"),
             "out", c.out);
  bind_value(layer,
             sub->add_option("--format", c.format, "Output format")
                 ->check(CLI::IsMember({"csv", "json"})),
             "format", c.format);
  sub->add_option("--config", c.config,
                  "JSON config file; command-line flags override its values");
}

void emit(const lqn::ExperimentResult& result, const Common& c) {
  const std::string text =
      c.format == "json" ? lqn::to_json(result) : lqn::to_csv(result);
  if (c.out.empty()) {
    std::cout << text;
  } else {
    lqn::write_text_file(c.out, text);
  }
}

void emit_text(const std::string& text, const Common& c) {
  if (c.out.empty()) {
    std::cout << text;
  } else {
    lqn::write_text_file(c.out, text);
  }
}

std::vector<int> parse_int_list(const std::string& text,
                                const std::string& flag) {
  std::vector<int> out;
  std::stringstream stream(text);
  std::string item;
  while (std::getline(stream, item, ',')) {
    try {
      std::size_t used = 0;
      const int value = std::stoi(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(value);
    } catch (const std::exception&) {
      throw std::invalid_argument(flag + ": cannot parse integer '" + item +
                                  "'");
    }
  }
  if (out.empty()) {
    throw std::invalid_argument(flag + ": empty list");
  }
  return out;
}

// "1,3" or "1-3" (1-based) -> zero-based (p, q).
std::pair<int, int> parse_mode_pair(const std::string& text,
                                    const std::string& flag, int bound) {
  std::string normalized = text;
  for (char& ch : normalized) {
    if (ch == '-') ch = ',';
  }
  const std::vector<int> values = parse_int_list(normalized, flag);
  if (values.size() != 2) {
    throw std::invalid_argument(flag + ": expected two mode labels");
  }
  const int p = values[0], q = values[1];
  if (p < 1 || q < 1 || p > bound || q > bound || p == q) {
    throw std::invalid_argument(flag + ": mode labels must be distinct and in 1.." +
                                std::to_string(bound));
  }
  return {std::min(p, q) - 1, std::max(p, q) - 1};
}

lqn::CMatrix named_network(const std::string& name) {
  if (name == "fourier") return lqn::fourier4();
  if (name == "sylvester") return lqn::sylvester4();
  if (name == "nonunitary") return lqn::nonunitary4();
  if (name == "hadamard") {
    lqn::CMatrix h(2, 2);
    h << 1.0, 1.0, 1.0, -1.0;
    return h / std::sqrt(2.0);
  }
  throw std::invalid_argument("unknown network '" + name +
                              "' (fourier|sylvester|nonunitary|hadamard)");
}

lqn::MediumModel parse_model(const std::string& name) {
  if (name == "RM") return lqn::MediumModel::RM;
  if (name == "RUM") return lqn::MediumModel::RUM;
  if (name == "FILE") return lqn::MediumModel::FILE;
  throw std::invalid_argument("unknown medium model '" + name +
                              "' (RM|RUM|FILE)");
}

// Programs the (p, q) column pair of a reference network through the medium.
lqn::CMatrix program_pair(const lqn::TransmissionMatrix& tm,
                          const lqn::CMatrix& reference, int p, int q) {
  const int k = static_cast<int>(reference.rows());
  std::vector<int> rows(static_cast<std::size_t>(k));
  std::iota(rows.begin(), rows.end(), 0);
  lqn::TargetTransform target;
  target.entries.resize(k, 2);
  target.entries.col(0) = reference.col(p);
  target.entries.col(1) = reference.col(q);
  return lqn::program_network(tm, rows, target).effective;
}

// ---------------------------------------------------------------------------
// Scenarios.

void add_fidelity_scaling(CLI::App& app, int& /*exit_code*/) {
  auto sub = app.add_subcommand(
      "fidelity-scaling", "Mean programming fidelity versus medium size");
  struct State {
    Common c;
    ConfigLayer layer;
    std::string model = "RM";
    std::string n_csv = "64,128,256,512";
    int m = 2;
    int k = 4;
    int trials = 200;
    std::string constraint = "full_complex";
    std::string tm_path;
  };
  auto st = std::make_shared<State>();
  add_common(sub, st->c, st->layer);
  bind_value(st->layer,
             sub->add_option("--model", st->model, "Medium model (RM|RUM|FILE)"),
             "model", st->model);
  bind_value(st->layer,
             sub->add_option("--n", st->n_csv, "Comma-separated medium sizes"),
             "n", st->n_csv);
  bind_value(st->layer, sub->add_option("--m", st->m, "Input ports"), "m",
             st->m);
  bind_value(st->layer, sub->add_option("--k", st->k, "Targeted outputs"), "k",
             st->k);
  bind_value(st->layer,
             sub->add_option("--trials", st->trials, "Trials per medium size"),
             "trials", st->trials);
  bind_value(st->layer,
             sub->add_option("--constraint", st->constraint,
                             "Modulation constraint (full_complex|phase_only)"),
             "constraint", st->constraint);
  bind_value(st->layer,
             sub->add_option("--tm", st->tm_path, "TMX file for model FILE"),
             "tm", st->tm_path);
  sub->callback([st]() {
    if (!st->c.config.empty()) st->layer.apply_file(st->c.config);
    lqn::ScalingConfig cfg;
    cfg.model = parse_model(st->model);
    cfg.n_list = parse_int_list(st->n_csv, "--n");
    cfg.m = st->m;
    cfg.k = st->k;
    cfg.trials = st->trials;
    cfg.seed = st->c.seed;
    if (st->constraint == "full_complex") {
      cfg.constraint = lqn::ModulationConstraint::full_complex;
    } else if (st->constraint == "phase_only") {
      cfg.constraint = lqn::ModulationConstraint::phase_only;
    } else {
      throw std::invalid_argument(
          "unknown constraint '" + st->constraint +
          "' (full_complex|phase_only)");
    }
    lqn::TransmissionMatrix file_tm;
    if (cfg.model == lqn::MediumModel::FILE) {
      if (st->tm_path.empty()) {
        throw std::invalid_argument("model FILE requires --tm <path>");
      }
      file_tm = lqn::load_tmx(st->tm_path);
      cfg.file_tm = &file_tm;
    }
    lqn::ExperimentResult result = lqn::scaling_experiment(cfg);
    result.add_meta("n_list", st->n_csv);
    result.add_meta("m", static_cast<long long>(st->m));
    result.add_meta("k", static_cast<long long>(st->k));
    result.add_meta("trials", static_cast<long long>(st->trials));
    emit(result, st->c);
  });
}

void add_eigen_spectrum(CLI::App& app, int& /*exit_code*/) {
  auto sub = app.add_subcommand(
      "eigen-spectrum",
      "Normalized density of the transmission eigenvalues tau/<tau>");
  struct State {
    Common c;
    ConfigLayer layer;
    std::string model = "FIBRE";
    int n = 398;
    double coupling = 1.0;
    double loss_spread = 0.0;
    int bins = 40;
    std::string tm_path;
  };
  auto st = std::make_shared<State>();
  add_common(sub, st->c, st->layer);
  bind_value(st->layer,
             sub->add_option("--model", st->model,
                             "Medium model (FIBRE|RM|RUM|FILE)"),
             "model", st->model);
  bind_value(st->layer, sub->add_option("--n", st->n, "Medium size"), "n",
             st->n);
  bind_value(st->layer,
             sub->add_option("--coupling", st->coupling,
                             "Fibre mode-coupling strength in [0,1]"),
             "coupling", st->coupling);
  bind_value(st->layer,
             sub->add_option("--loss-spread", st->loss_spread,
                             "Fibre loss spread in [0,1]"),
             "loss-spread", st->loss_spread);
  bind_value(st->layer,
             sub->add_option("--bins", st->bins, "Histogram bin count"), "bins",
             st->bins);
  bind_value(st->layer,
             sub->add_option("--tm", st->tm_path, "TMX file for model FILE"),
             "tm", st->tm_path);
  sub->callback([st]() {
    if (!st->c.config.empty()) st->layer.apply_file(st->c.config);
    lqn::TransmissionMatrix tm;
    if (st->model == "FIBRE") {
      tm = lqn::gen_synthetic_fibre(st->n, st->coupling, st->loss_spread,
                                    st->c.seed);
    } else if (st->model == "RM") {
      tm = lqn::gen_random_gaussian(st->n, st->n, st->c.seed);
    } else if (st->model == "RUM") {
      tm = lqn::gen_random_unitary(st->n, st->c.seed);
    } else if (st->model == "FILE") {
      if (st->tm_path.empty()) {
        throw std::invalid_argument("model FILE requires --tm <path>");
      }
      tm = lqn::load_tmx(st->tm_path);
    } else {
      throw std::invalid_argument("unknown medium model '" + st->model +
                                  "' (FIBRE|RM|RUM|FILE)");
    }
    const lqn::EigenvalueSpectrum spec = lqn::transmission_spectrum(tm, st->bins);
    lqn::ExperimentResult result;
    result.add_meta("tool_version", lqn::kToolVersion);
    result.add_meta("experiment", "eigen-spectrum");
    result.add_meta("model", st->model);
    result.add_meta("n_out", static_cast<long long>(tm.n_out()));
    result.add_meta("n_in", static_cast<long long>(tm.n_in()));
    if (st->model == "FIBRE") {
      result.add_meta("coupling", st->coupling);
      result.add_meta("loss_spread", st->loss_spread);
    }
    result.add_meta("bins", static_cast<long long>(st->bins));
    result.add_meta("seed", static_cast<long long>(st->c.seed));
    result.add_meta("mean_tau", spec.mean);
    result.add_meta("degenerate", static_cast<long long>(spec.degenerate ? 1 : 0));
    result.columns = {"bin_lo", "bin_hi", "density"};
    for (std::size_t b = 0; b + 1 < spec.bin_edges.size(); ++b) {
      result.rows.push_back(
          {spec.bin_edges[b], spec.bin_edges[b + 1], spec.densities[b]});
    }
    emit(result, st->c);
  });
}

void add_visibility_pattern(CLI::App& app, int& /*exit_code*/) {
  auto sub = app.add_subcommand(
      "visibility-pattern",
      "Two-photon visibility of every input pair x output pair of an ideal "
      "reference network");
  struct State {
    Common c;
    ConfigLayer layer;
    std::string network = "fourier";
  };
  auto st = std::make_shared<State>();
  add_common(sub, st->c, st->layer);
  bind_value(st->layer,
             sub->add_option("--network", st->network,
                             "Reference network (fourier|sylvester|nonunitary)"),
             "network", st->network);
  sub->callback([st]() {
    if (!st->c.config.empty()) st->layer.apply_file(st->c.config);
    const lqn::CMatrix net = named_network(st->network);
    const lqn::VisibilityPattern pattern =
        lqn::visibility_pattern(lqn::family_of(net));
    if (st->c.format == "csv") {
      std::ostringstream out;
      out << "# tool_version=" << lqn::kToolVersion << "\n"
          << "# experiment=visibility-pattern\n"
          << "# network=" << st->network << "\n";
      out << lqn::visibility_csv(pattern);
      emit_text(out.str(), st->c);
      return;
    }
    nlohmann::ordered_json j;
    j["metadata"] = {{"tool_version", lqn::kToolVersion},
                     {"experiment", "visibility-pattern"},
                     {"network", st->network}};
    nlohmann::ordered_json outputs = nlohmann::ordered_json::array();
    for (const auto& [a, b] : pattern.output_pairs) {
      outputs.push_back({a + 1, b + 1});
    }
    nlohmann::ordered_json inputs = nlohmann::ordered_json::array();
    for (const auto& [a, b] : pattern.input_pairs) {
      inputs.push_back({a + 1, b + 1});
    }
    nlohmann::ordered_json v = nlohmann::ordered_json::array();
    for (int r = 0; r < pattern.v.rows(); ++r) {
      nlohmann::ordered_json row = nlohmann::ordered_json::array();
      for (int col = 0; col < pattern.v.cols(); ++col) {
        if (pattern.defined(r, col)) {
          row.push_back(pattern.v(r, col));
        } else {
          row.push_back(nullptr);
        }
      }
      v.push_back(std::move(row));
    }
    j["output_pairs"] = std::move(outputs);
    j["input_pairs"] = std::move(inputs);
    j["visibility"] = std::move(v);
    emit_text(j.dump(2) + "\n", st->c);
  });
}

void add_hom_scan(CLI::App& app, int& /*exit_code*/) {
  auto sub = app.add_subcommand(
      "hom-scan", "Coincidence probability versus relative photon delay");
  struct State {
    Common c;
    ConfigLayer layer;
    std::string network = "hadamard";
    std::string input_pair = "1,2";
    std::string output_pair = "1,2";
    double fwhm_ps = 1.5;
    double span_ps = 4.0;
    int steps = 161;
  };
  auto st = std::make_shared<State>();
  add_common(sub, st->c, st->layer);
  bind_value(st->layer,
             sub->add_option("--network", st->network,
                             "Network (hadamard|fourier|sylvester|nonunitary)"),
             "network", st->network);
  bind_value(st->layer,
             sub->add_option("--input-pair", st->input_pair,
                             "Input mode pair, 1-based (e.g. 1,3)"),
             "input-pair", st->input_pair);
  bind_value(st->layer,
             sub->add_option("--output-pair", st->output_pair,
                             "Output mode pair, 1-based"),
             "output-pair", st->output_pair);
  bind_value(st->layer,
             sub->add_option("--fwhm-ps", st->fwhm_ps,
                             "Two-photon coherence FWHM in picoseconds"),
             "fwhm-ps", st->fwhm_ps);
  bind_value(st->layer,
             sub->add_option("--span-ps", st->span_ps,
                             "Scan half-width in picoseconds"),
             "span-ps", st->span_ps);
  bind_value(st->layer,
             sub->add_option("--steps", st->steps, "Number of delay samples"),
             "steps", st->steps);
  sub->callback([st]() {
    if (!st->c.config.empty()) st->layer.apply_file(st->c.config);
    if (st->fwhm_ps <= 0.0) {
      throw std::invalid_argument("--fwhm-ps must be positive");
    }
    if (st->steps < 2) {
      throw std::invalid_argument("--steps must be at least 2");
    }
    if (st->span_ps <= 0.0) {
      throw std::invalid_argument("--span-ps must be positive");
    }
    const lqn::CMatrix net = named_network(st->network);
    const auto [p, q] =
        parse_mode_pair(st->input_pair, "--input-pair",
                        static_cast<int>(net.cols()));
    const auto [a, b] =
        parse_mode_pair(st->output_pair, "--output-pair",
                        static_cast<int>(net.rows()));
    std::vector<double> delays;
    delays.reserve(static_cast<std::size_t>(st->steps));
    for (int i = 0; i < st->steps; ++i) {
      const double frac = static_cast<double>(i) / (st->steps - 1);
      delays.push_back((-st->span_ps + 2.0 * st->span_ps * frac) * 1e-12);
    }
    lqn::ExperimentResult result =
        lqn::hom_scan(net, p, q, delays, st->fwhm_ps * 1e-12, {a, b});
    result.add_meta("network", st->network);
    result.add_meta("span_ps", st->span_ps);
    result.add_meta("steps", static_cast<long long>(st->steps));
    result.add_meta("seed", static_cast<long long>(st->c.seed));
    emit(result, st->c);
  });
}

void add_suppression(CLI::App& app, int& /*exit_code*/) {
  auto sub = app.add_subcommand(
      "suppression",
      "Degree of violation of the suppression law for reference networks "
      "programmed through a Gaussian medium");
  struct State {
    Common c;
    ConfigLayer layer;
    int n = 398;
    int seeds = 100;
  };
  auto st = std::make_shared<State>();
  add_common(sub, st->c, st->layer);
  bind_value(st->layer, sub->add_option("--n", st->n, "Medium size"), "n",
             st->n);
  bind_value(st->layer,
             sub->add_option("--seeds", st->seeds, "Number of medium draws"),
             "seeds", st->seeds);
  sub->callback([st]() {
    if (!st->c.config.empty()) st->layer.apply_file(st->c.config);
    if (st->seeds < 1) throw std::invalid_argument("--seeds must be positive");
    const lqn::CMatrix fourier = lqn::fourier4();
    const lqn::CMatrix sylvester = lqn::sylvester4();
    const lqn::TwoPhotonInput indist;
    struct Case {
      int network_id;  // 0 = fourier, 1 = sylvester
      const lqn::CMatrix* reference;
      int p, q;
    };
    std::vector<Case> cases;
    cases.push_back({0, &fourier, 0, 2});
    cases.push_back({0, &fourier, 1, 3});
    for (int p = 0; p < 4; ++p) {
      for (int q = p + 1; q < 4; ++q) {
        cases.push_back({1, &sylvester, p, q});
      }
    }
    lqn::ExperimentResult result;
    result.add_meta("tool_version", lqn::kToolVersion);
    result.add_meta("experiment", "suppression");
    result.add_meta("model", "RM");
    result.add_meta("n", static_cast<long long>(st->n));
    result.add_meta("seeds", static_cast<long long>(st->seeds));
    result.add_meta("seed", static_cast<long long>(st->c.seed));
    result.add_meta("network_ids", "0=fourier,1=sylvester");
    result.columns = {"network", "in_i", "in_j", "d_ideal", "d_mean", "d_max"};
    std::vector<double> sums(cases.size(), 0.0), maxima(cases.size(), 0.0);
    std::vector<double> ideals(cases.size(), 0.0);
    for (std::size_t ci = 0; ci < cases.size(); ++ci) {
      const Case& cs = cases[ci];
      const lqn::CMatrix ideal_cols =
          lqn::columns_pair(*cs.reference, cs.p, cs.q);
      ideals[ci] =
          lqn::degree_of_violation(
              ideal_cols, lqn::two_photon_distribution(ideal_cols, indist))
              .value;
    }
    for (int s = 0; s < st->seeds; ++s) {
      lqn::TransmissionMatrix tm = lqn::gen_random_gaussian(
          st->n, st->n,
          lqn::derive_seed(st->c.seed, static_cast<std::uint64_t>(s)));
      tm.ports = 2;
      for (std::size_t ci = 0; ci < cases.size(); ++ci) {
        const Case& cs = cases[ci];
        const lqn::CMatrix realized = program_pair(tm, *cs.reference, cs.p, cs.q);
        const lqn::DegreeOfViolation d = lqn::degree_of_violation(
            lqn::columns_pair(*cs.reference, cs.p, cs.q),
            lqn::two_photon_distribution(realized, indist));
        sums[ci] += d.value;
        maxima[ci] = std::max(maxima[ci], d.value);
      }
    }
    for (std::size_t ci = 0; ci < cases.size(); ++ci) {
      const Case& cs = cases[ci];
      result.rows.push_back({static_cast<double>(cs.network_id),
                             static_cast<double>(cs.p + 1),
                             static_cast<double>(cs.q + 1), ideals[ci],
                             sums[ci] / st->seeds, maxima[ci]});
    }
    emit(result, st->c);
  });
}

void add_coherent_absorption(CLI::App& app, int& /*exit_code*/) {
  auto sub = app.add_subcommand(
      "coherent-absorption",
      "Two-photon survival surface of the lossy-splitter network over "
      "(phi, alpha)");
  struct State {
    Common c;
    ConfigLayer layer;
    int alpha_steps = 33;
    int phi_steps = 65;
    double t = 0.5;
  };
  auto st = std::make_shared<State>();
  add_common(sub, st->c, st->layer);
  bind_value(st->layer,
             sub->add_option("--alpha-steps", st->alpha_steps,
                             "Samples of alpha over [0, pi]"),
             "alpha-steps", st->alpha_steps);
  bind_value(st->layer,
             sub->add_option("--phi-steps", st->phi_steps,
                             "Samples of phi over [0, 2 pi]"),
             "phi-steps", st->phi_steps);
  bind_value(st->layer,
             sub->add_option("--t", st->t, "Splitter amplitude (0 < t <= 1/2)"),
             "t", st->t);
  sub->callback([st]() {
    if (!st->c.config.empty()) st->layer.apply_file(st->c.config);
    if (st->alpha_steps < 2 || st->phi_steps < 2) {
      throw std::invalid_argument("--alpha-steps and --phi-steps must be >= 2");
    }
    std::vector<double> phis, alphas;
    phis.reserve(static_cast<std::size_t>(st->phi_steps));
    alphas.reserve(static_cast<std::size_t>(st->alpha_steps));
    for (int i = 0; i < st->phi_steps; ++i) {
      phis.push_back(2.0 * kPi * i / (st->phi_steps - 1));
    }
    for (int i = 0; i < st->alpha_steps; ++i) {
      alphas.push_back(kPi * i / (st->alpha_steps - 1));
    }
    lqn::ExperimentResult result = lqn::absorption_scan(phis, alphas, st->t);
    result.add_meta("alpha_steps", static_cast<long long>(st->alpha_steps));
    result.add_meta("phi_steps", static_cast<long long>(st->phi_steps));
    result.add_meta("seed", static_cast<long long>(st->c.seed));
    emit(result, st->c);
  });
}

void add_tm_acquire(CLI::App& app, int& /*exit_code*/) {
  auto sub = app.add_subcommand(
      "tm-acquire",
      "Holographic acquisition round-trip: measure, calibrate, program, and "
      "compare against the true medium");
  struct State {
    Common c;
    ConfigLayer layer;
    int n = 256;
    int m = 2;
    int k = 4;
    int phase_steps = 4;
    double budget = 0.0;  // <= 0 means noiseless
    double reference_strength = 1.0;
    int targets = 16;
    bool no_normalize = false;
  };
  auto st = std::make_shared<State>();
  add_common(sub, st->c, st->layer);
  bind_value(st->layer, sub->add_option("--n", st->n, "Medium size"), "n",
             st->n);
  bind_value(st->layer, sub->add_option("--m", st->m, "Input ports"), "m",
             st->m);
  bind_value(st->layer, sub->add_option("--k", st->k, "Targeted outputs"), "k",
             st->k);
  bind_value(st->layer,
             sub->add_option("--phase-steps", st->phase_steps,
                             "Phase-stepping frames per input mode (>= 3)"),
             "phase-steps", st->phase_steps);
  bind_value(st->layer,
             sub->add_option("--budget", st->budget,
                             "Photon budget per intensity measurement "
                             "(<= 0: noiseless)"),
             "budget", st->budget);
  bind_value(st->layer,
             sub->add_option("--reference-strength", st->reference_strength,
                             "Reference speckle amplitude scale"),
             "reference-strength", st->reference_strength);
  bind_value(st->layer,
             sub->add_option("--targets", st->targets,
                             "Random probe targets for the fidelity average"),
             "targets", st->targets);
  bind_value(st->layer,
             sub->add_flag("--no-normalize-rows", st->no_normalize,
                           "Keep raw reference-row moduli"),
             "no-normalize-rows", st->no_normalize);
  sub->callback([st]() {
    if (!st->c.config.empty()) st->layer.apply_file(st->c.config);
    if (st->m < 2 || st->n % st->m != 0) {
      throw std::invalid_argument("--n must be divisible by --m (m >= 2)");
    }
    // Lossless medium: keeps every programmed sub-network passive, so the
    // two-photon verification stage is defined for every seed.
    lqn::TransmissionMatrix tm =
        lqn::gen_random_unitary(st->n, lqn::derive_seed(st->c.seed, 1));
    tm.ports = st->m;
    lqn::AcquisitionConfig cfg;
    cfg.phase_steps = st->phase_steps;
    cfg.photon_budget = st->budget > 0.0
                            ? st->budget
                            : std::numeric_limits<double>::infinity();
    cfg.reference_strength = st->reference_strength;
    cfg.seed = lqn::derive_seed(st->c.seed, 2);
    cfg.normalize_rows = !st->no_normalize;
    const lqn::RoundtripReport report =
        lqn::acquisition_roundtrip(tm, st->m, st->k, cfg, st->targets);
    if (st->c.format == "json") {
      std::ostringstream out;
      out << "{\"metadata\":{\"tool_version\":\"" << lqn::kToolVersion
          << "\",\"experiment\":\"tm-acquire\",\"n\":" << st->n
          << ",\"m\":" << st->m << ",\"k\":" << st->k
          << ",\"phase_steps\":" << st->phase_steps
          << ",\"photon_budget\":" << (st->budget > 0.0
                                           ? lqn::format_double(st->budget)
                                           : std::string("\"inf\""))
          << ",\"reference_strength\":"
          << lqn::format_double(st->reference_strength)
          << ",\"targets\":" << st->targets
          << ",\"normalize_rows\":" << (st->no_normalize ? "false" : "true")
          << ",\"seed\":" << st->c.seed << "},\"report\":" << report.to_json()
          << "}\n";
      emit_text(out.str(), st->c);
      return;
    }
    lqn::ExperimentResult result;
    result.add_meta("tool_version", lqn::kToolVersion);
    result.add_meta("experiment", "tm-acquire");
    result.add_meta("n", static_cast<long long>(st->n));
    result.add_meta("m", static_cast<long long>(st->m));
    result.add_meta("k", static_cast<long long>(st->k));
    result.add_meta("phase_steps", static_cast<long long>(st->phase_steps));
    result.add_meta("photon_budget",
                    st->budget > 0.0 ? lqn::format_double(st->budget)
                                     : std::string("inf"));
    result.add_meta("reference_strength", st->reference_strength);
    result.add_meta("targets", static_cast<long long>(st->targets));
    result.add_meta("normalize_rows", st->no_normalize ? "0" : "1");
    result.add_meta("seed", static_cast<long long>(st->c.seed));
    result.columns = {"fidelity_true_mean",   "fidelity_measured_mean",
                      "fidelity_gap_mean",    "fidelity_gap_max_abs",
                      "fidelity_estimated_mean", "fidelity_raw_mean",
                      "delta_v_vs_ideal",     "delta_v_vs_trueprog",
                      "residual_delta_v"};
    result.rows.push_back(
        {report.fidelity_true_mean, report.fidelity_measured_mean,
         report.fidelity_gap_mean, report.fidelity_gap_max_abs,
         report.fidelity_estimated_mean, report.fidelity_raw_mean,
         report.delta_v_vs_ideal, report.delta_v_vs_trueprog,
         report.calibration.residual_delta_v});
    emit(result, st->c);
  });
}

void add_multi_target(CLI::App& app, int& /*exit_code*/) {
  auto sub = app.add_subcommand(
      "multi-target",
      "Program many simultaneous targets and report per-target intensity "
      "shares and transmittance");
  struct State {
    Common c;
    ConfigLayer layer;
    int targets = 18;
    int n = 398;
    int m = 2;
  };
  auto st = std::make_shared<State>();
  add_common(sub, st->c, st->layer);
  bind_value(st->layer,
             sub->add_option("--targets", st->targets, "Number of targets"),
             "targets", st->targets);
  bind_value(st->layer, sub->add_option("--n", st->n, "Medium size"), "n",
             st->n);
  bind_value(st->layer, sub->add_option("--m", st->m, "Input ports"), "m",
             st->m);
  sub->callback([st]() {
    if (!st->c.config.empty()) st->layer.apply_file(st->c.config);
    if (st->targets < 1 || st->targets > st->n) {
      throw std::invalid_argument("--targets must be in 1..n");
    }
    if (st->m < 2 || st->n % st->m != 0) {
      throw std::invalid_argument("--n must be divisible by --m (m >= 2)");
    }
    lqn::TransmissionMatrix tm = lqn::gen_random_gaussian(
        st->n, st->n, lqn::derive_seed(st->c.seed, 1));
    tm.ports = st->m;
    std::vector<int> rows(static_cast<std::size_t>(st->targets));
    std::iota(rows.begin(), rows.end(), 0);
    lqn::RandomStream rng(lqn::derive_seed(st->c.seed, 2));
    const lqn::TargetTransform target =
        lqn::sample_target(st->targets, st->m, rng);
    const lqn::ProgrammedNetwork net = lqn::program_network(tm, rows, target);
    double total = 0.0;
    std::vector<double> intensity(static_cast<std::size_t>(st->targets));
    for (int i = 0; i < st->targets; ++i) {
      intensity[static_cast<std::size_t>(i)] = net.effective.row(i).squaredNorm();
      total += intensity[static_cast<std::size_t>(i)];
    }
    double gamma_mean = 0.0;
    for (double g : net.transmittance) gamma_mean += g;
    gamma_mean /= static_cast<double>(net.transmittance.size());
    lqn::ExperimentResult result;
    result.add_meta("tool_version", lqn::kToolVersion);
    result.add_meta("experiment", "multi-target");
    result.add_meta("n", static_cast<long long>(st->n));
    result.add_meta("m", static_cast<long long>(st->m));
    result.add_meta("targets", static_cast<long long>(st->targets));
    result.add_meta("seed", static_cast<long long>(st->c.seed));
    result.add_meta("fidelity", net.fidelity);
    result.add_meta("gamma_mean", gamma_mean);
    for (std::size_t j = 0; j < net.transmittance.size(); ++j) {
      result.add_meta("gamma_port_" + std::to_string(j + 1),
                      net.transmittance[j]);
    }
    result.columns = {"target", "intensity", "share"};
    for (int i = 0; i < st->targets; ++i) {
      const double in_i = intensity[static_cast<std::size_t>(i)];
      result.rows.push_back({static_cast<double>(i + 1), in_i,
                             total > 0.0
                                 ? in_i / total
                                 : std::numeric_limits<double>::quiet_NaN()});
    }
    emit(result, st->c);
  });
}

void add_validate(CLI::App& app, int& exit_code) {
  auto sub = app.add_subcommand(
      "validate",
      "Run the acceptance battery and print one pass/fail line per criterion");
  struct State {
    Common c;
    ConfigLayer layer;
    int criterion = 0;
  };
  auto st = std::make_shared<State>();
  add_common(sub, st->c, st->layer);
  bind_value(st->layer,
             sub->add_option("--criterion", st->criterion,
                             "Run a single criterion (1..11); 0 runs all")
                 ->check(CLI::Range(0, lqn::kCriterionCount)),
             "criterion", st->criterion);
  sub->callback([st, &exit_code]() {
    if (!st->c.config.empty()) st->layer.apply_file(st->c.config);
    std::vector<lqn::CriterionResult> results;
    if (st->criterion == 0) {
      results = lqn::run_all_criteria();
    } else {
      results.push_back(lqn::run_criterion(st->criterion));
    }
    std::ostringstream out;
    bool all_pass = true;
    for (const auto& r : results) {
      out << lqn::format_criterion_line(r) << "\n";
      all_pass = all_pass && r.pass;
    }
    out << (all_pass ? "RESULT PASS" : "RESULT FAIL") << " ("
        << results.size() << " criteria)\n";
    std::cout << out.str();
    if (!st->c.out.empty()) {
      lqn::write_text_file(st->c.out, out.str());
    }
    if (!all_pass) exit_code = kExitValidation;
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "lqn — programmable linear quantum-optical networks in complex media"};
  app.require_subcommand(1);
  int exit_code = 0;
  add_fidelity_scaling(app, exit_code);
  add_eigen_spectrum(app, exit_code);
  add_visibility_pattern(app, exit_code);
  add_hom_scan(app, exit_code);
  add_suppression(app, exit_code);
  add_coherent_absorption(app, exit_code);
  add_tm_acquire(app, exit_code);
  add_multi_target(app, exit_code);
  add_validate(app, exit_code);
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::runtime_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return exit_code;
}
