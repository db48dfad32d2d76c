#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>
#include <json.hpp>

#include "lqn/medium.hpp"
#include "lqn/result.hpp"

namespace {

namespace fs = std::filesystem;

const std::string& cli_path() {
  static const std::string path = [] {
    const char* env = std::getenv("LQN_CLI");
    return env ? std::string(env) : std::string();
  }();
  return path;
}

const std::string& tmp_dir() {
  static const std::string dir = [] {
    const fs::path p = fs::temp_directory_path() /
                       ("lqn_cli_" + std::to_string(::getpid()));
    fs::create_directories(p);
    return p.string();
  }();
  return dir;
}

std::string slurp(const std::string& path) {
  try {
    return lqn::read_text_file(path);
  } catch (const std::exception&) {
    return std::string();
  }
}

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

RunResult run_cli(const std::string& args) {
  static int counter = 0;
  const std::string base = tmp_dir() + "/run" + std::to_string(counter++);
  const std::string cmd = "\"" + cli_path() + "\" " + args + " >" + base +
                          ".out 2>" + base + ".err";
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(base + ".out");
  r.err = slurp(base + ".err");
  return r;
}

struct Csv {
  std::map<std::string, std::string> meta;
  std::string header;
  std::vector<std::vector<double>> rows;
};

Csv parse_csv(const std::string& text) {
  Csv csv;
  std::istringstream stream(text);
  std::string line;
  while (std::getline(stream, line)) {
    if (line.empty()) continue;
    if (line.rfind("# ", 0) == 0) {
      const std::size_t eq = line.find('=');
      if (eq != std::string::npos) {
        csv.meta[line.substr(2, eq - 2)] = line.substr(eq + 1);
      }
      continue;
    }
    if (csv.header.empty()) {
      csv.header = line;
      continue;
    }
    std::vector<double> row;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) {
      row.push_back(cell.empty() ? std::nan("") : std::stod(cell));
    }
    csv.rows.push_back(std::move(row));
  }
  return csv;
}

std::string write_config(const std::string& name, const std::string& body) {
  const std::string path = tmp_dir() + "/" + name;
  lqn::write_text_file(path, body);
  return path;
}

}  // namespace

TEST_CASE("cli binary is exposed to the test environment") {
  REQUIRE_MESSAGE(!cli_path().empty(),
                  "LQN_CLI must point at the lqn binary (set by ctest)");
  REQUIRE(fs::exists(cli_path()));
}

TEST_CASE("usage errors exit with code 2") {
  CHECK(run_cli("").exit_code == 2);
  CHECK(run_cli("frobnicate").exit_code == 2);
  CHECK(run_cli("hom-scan --nope").exit_code == 2);
  CHECK(run_cli("validate --criterion 12").exit_code == 2);
  CHECK(run_cli("validate --criterion -1").exit_code == 2);
  CHECK(run_cli("hom-scan --input-pair 1,1").exit_code == 2);
  CHECK(run_cli("hom-scan --input-pair 0,1").exit_code == 2);
  CHECK(run_cli("hom-scan --steps 1").exit_code == 2);
  CHECK(run_cli("fidelity-scaling --model BOGUS").exit_code == 2);
  CHECK(run_cli("fidelity-scaling --n ''").exit_code == 2);
  CHECK(run_cli("eigen-spectrum --model FILE").exit_code == 2);
}

TEST_CASE("runtime failures exit with code 1") {
  const RunResult r =
      run_cli("eigen-spectrum --model FILE --tm /nonexistent/tm.json");
  CHECK(r.exit_code == 1);
  CHECK(r.err.find("error:") != std::string::npos);
}

TEST_CASE("validate reports per-criterion lines and validation exit code") {
  const RunResult pass = run_cli("validate --criterion 7");
  CHECK(pass.exit_code == 0);
  CHECK(pass.out.find("criterion 7 PASS") != std::string::npos);
  CHECK(pass.out.find("RESULT PASS (1 criteria)") != std::string::npos);

  const RunResult fail = run_cli("validate --criterion 9");
  CHECK(fail.exit_code == 3);
  CHECK(fail.out.find("criterion 9 FAIL") != std::string::npos);
  CHECK(fail.out.find("RESULT FAIL (1 criteria)") != std::string::npos);
}

TEST_CASE("scenario output is byte-identical across reruns") {
  const std::string args =
      "fidelity-scaling --n 64 --trials 15 --seed 9 --out ";
  const std::string f1 = tmp_dir() + "/scal1.csv";
  const std::string f2 = tmp_dir() + "/scal2.csv";
  CHECK(run_cli(args + f1).exit_code == 0);
  const RunResult second = run_cli(args + f2);
  CHECK(second.exit_code == 0);
  CHECK(second.out.empty());  // --out suppresses stdout

  const std::string text1 = slurp(f1);
  REQUIRE(!text1.empty());
  CHECK(text1 == slurp(f2));
  CHECK(text1.rfind("# tool_version=", 0) == 0);

  const Csv csv = parse_csv(text1);
  CHECK(csv.meta.at("experiment") == "fidelity-scaling");
  CHECK(csv.meta.at("seed") == "9");
  CHECK(csv.header ==
        "n,m,k,trials,fidelity_mean,fidelity_std,transmittance_mean");
  REQUIRE(csv.rows.size() == 1);
  CHECK(csv.rows[0][0] == 64.0);
  CHECK(csv.rows[0][4] > 0.5);
  CHECK(csv.rows[0][4] < 0.9);
}

TEST_CASE("config file fills defaults and command-line flags win") {
  const std::string config = write_config(
      "scaling.json", "{\"trials\": 10, \"n\": [32, 64], \"seed\": 4}");
  const RunResult r = run_cli("fidelity-scaling --config " + config +
                              " --trials 5");
  CHECK(r.exit_code == 0);
  const Csv csv = parse_csv(r.out);
  CHECK(csv.meta.at("trials") == "5");       // flag overrides config
  CHECK(csv.meta.at("n_list") == "32,64");   // config array accepted
  CHECK(csv.meta.at("seed") == "4");
  REQUIRE(csv.rows.size() == 2);
  CHECK(csv.rows[0][0] == 32.0);
  CHECK(csv.rows[1][0] == 64.0);
}

TEST_CASE("unknown config keys are rejected") {
  const std::string config = write_config("bogus.json", "{\"bogus\": 3}");
  const RunResult r = run_cli("hom-scan --config " + config);
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("unknown config key 'bogus'") != std::string::npos);
}

TEST_CASE("malformed config files are usage errors") {
  const std::string config = write_config("broken.json", "{not json");
  CHECK(run_cli("hom-scan --config " + config).exit_code == 2);
  const std::string array = write_config("array.json", "[1,2,3]");
  CHECK(run_cli("hom-scan --config " + array).exit_code == 2);
}

TEST_CASE("coherent-absorption emits the full default grid") {
  const RunResult r = run_cli("coherent-absorption");
  CHECK(r.exit_code == 0);
  const Csv csv = parse_csv(r.out);
  CHECK(csv.meta.at("experiment") == "coherent-absorption");
  CHECK(csv.meta.at("alpha_steps") == "33");
  CHECK(csv.meta.at("phi_steps") == "65");
  CHECK(csv.meta.count("baseline_survival") == 1);
  CHECK(csv.header == "phi,alpha,t,total,p20,p02,p11,normalized_total");
  REQUIRE(csv.rows.size() == 33u * 65u);
  double max_norm = 0.0;
  for (const auto& row : csv.rows) max_norm = std::max(max_norm, row[7]);
  CHECK(max_norm == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("config values reach the scan grid") {
  const std::string config = write_config(
      "absorb.json", "{\"alpha-steps\": 3, \"phi-steps\": 5, \"t\": 0.4}");
  const RunResult r =
      run_cli("coherent-absorption --config " + config + " --phi-steps 7");
  CHECK(r.exit_code == 0);
  const Csv csv = parse_csv(r.out);
  CHECK(csv.meta.at("alpha_steps") == "3");
  CHECK(csv.meta.at("phi_steps") == "7");
  REQUIRE(csv.rows.size() == 21);
  for (const auto& row : csv.rows) CHECK(row[2] == 0.4);
}

TEST_CASE("hom-scan covers the configured delay window") {
  const RunResult r = run_cli("hom-scan --steps 21 --span-ps 3 --fwhm-ps 1.5");
  CHECK(r.exit_code == 0);
  const Csv csv = parse_csv(r.out);
  CHECK(csv.meta.at("experiment") == "hom-scan");
  CHECK(csv.meta.at("input_pair") == "1-2");
  CHECK(csv.header == "delay_s,x,coincidence");
  REQUIRE(csv.rows.size() == 21);
  CHECK(csv.rows.front()[0] == doctest::Approx(-3e-12).epsilon(1e-12));
  CHECK(csv.rows.back()[0] == doctest::Approx(3e-12).epsilon(1e-12));
  const auto& center = csv.rows[10];
  CHECK(center[0] == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(center[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(center[2] == doctest::Approx(0.0).epsilon(1e-12));  // full HOM dip

  const RunResult deflt = run_cli("hom-scan");
  const Csv full = parse_csv(deflt.out);
  CHECK(full.rows.size() == 161);
}

TEST_CASE("suppression scenario tabulates the reference cases") {
  const RunResult r = run_cli("suppression --n 64 --seeds 2 --seed 5");
  CHECK(r.exit_code == 0);
  const Csv csv = parse_csv(r.out);
  CHECK(csv.header == "network,in_i,in_j,d_ideal,d_mean,d_max");
  CHECK(csv.meta.at("network_ids") == "0=fourier,1=sylvester");
  REQUIRE(csv.rows.size() == 8);  // 2 Fourier pairs + 6 Sylvester pairs
  int fourier = 0, sylvester = 0;
  for (const auto& row : csv.rows) {
    (row[0] == 0.0 ? fourier : sylvester) += 1;
    CHECK(row[3] < 1e-9);   // ideal violation vanishes
    CHECK(row[4] >= 0.0);   // programmed violation is a probability fraction
    CHECK(row[4] < 0.5);
    CHECK(row[5] >= row[4]);
    CHECK(row[1] >= 1.0);   // 1-based mode labels
    CHECK(row[2] <= 4.0);
  }
  CHECK(fourier == 2);
  CHECK(sylvester == 6);
}

TEST_CASE("visibility-pattern json mirrors the ideal pattern") {
  const RunResult r =
      run_cli("visibility-pattern --network sylvester --format json");
  CHECK(r.exit_code == 0);
  const nlohmann::json doc = nlohmann::json::parse(r.out);
  CHECK(doc["metadata"]["network"] == "sylvester");
  REQUIRE(doc["output_pairs"].size() == 6);
  REQUIRE(doc["input_pairs"].size() == 6);
  CHECK(doc["output_pairs"][0] == nlohmann::json::array({1, 2}));
  int defined = 0;
  for (const auto& row : doc["visibility"]) {
    REQUIRE(row.size() == 6);
    for (const auto& cell : row) {
      if (cell.is_null()) continue;
      ++defined;
      const double v = cell.get<double>();
      CHECK(std::min(std::abs(v - 1.0), std::abs(v + 1.0)) < 1e-9);
    }
  }
  CHECK(defined == 36);

  const RunResult csv_form = run_cli("visibility-pattern --network fourier");
  CHECK(csv_form.exit_code == 0);
  CHECK(csv_form.out.find("output_pair,in_1-2,in_1-3,in_1-4,in_2-3,in_2-4,"
                          "in_3-4\n") != std::string::npos);
}

TEST_CASE("eigen-spectrum histogram and FILE round-trip") {
  const RunResult rm = run_cli("eigen-spectrum --model RM --n 96 --bins 12");
  CHECK(rm.exit_code == 0);
  const Csv csv = parse_csv(rm.out);
  CHECK(csv.meta.at("model") == "RM");
  CHECK(csv.header == "bin_lo,bin_hi,density");
  REQUIRE(csv.rows.size() == 12);
  double integral = 0.0;
  for (const auto& row : csv.rows) integral += (row[1] - row[0]) * row[2];
  CHECK(integral == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(std::stod(csv.meta.at("mean_tau")) > 0.5);

  const std::string tmx = tmp_dir() + "/medium.json";
  lqn::write_text_file(tmx,
                       lqn::to_tmx_json(lqn::gen_random_gaussian(12, 12, 77)));
  const RunResult file = run_cli("eigen-spectrum --model FILE --tm " + tmx +
                                 " --bins 6");
  CHECK(file.exit_code == 0);
  const Csv loaded = parse_csv(file.out);
  CHECK(loaded.meta.at("n_out") == "12");
  CHECK(loaded.rows.size() == 6);
}

TEST_CASE("tm-acquire json report") {
  const std::string args =
      "tm-acquire --n 64 --k 4 --targets 6 --seed 3 --format json";
  const RunResult r = run_cli(args);
  CHECK(r.exit_code == 0);
  const nlohmann::json doc = nlohmann::json::parse(r.out);
  CHECK(doc["metadata"]["experiment"] == "tm-acquire");
  CHECK(doc["metadata"]["photon_budget"] == "inf");
  CHECK(doc["metadata"]["n"] == 64);
  const auto& report = doc["report"];
  CHECK(report["programming_fidelity"].get<double>() > 0.5);
  CHECK(report["programming_fidelity"].get<double>() < 0.95);
  CHECK(std::abs(report["vs_ground_truth"].get<double>()) < 0.05);
  CHECK(report["calibration"]["residual_delta_v"].get<double>() < 1e-9);
  REQUIRE(report["calibration"]["stage1_factor"].size() == 2);

  CHECK(run_cli(args).out == r.out);  // byte-identical rerun

  const RunResult csv_run =
      run_cli("tm-acquire --n 64 --k 4 --targets 6 --seed 3");
  const Csv csv = parse_csv(csv_run.out);
  REQUIRE(csv.rows.size() == 1);
  CHECK(csv.header.rfind("fidelity_true_mean,", 0) == 0);
  CHECK(csv.rows[0].size() == 9);
}

TEST_CASE("multi-target tabulates per-target shares") {
  const RunResult r = run_cli("multi-target --targets 18 --seed 11");
  CHECK(r.exit_code == 0);
  const Csv csv = parse_csv(r.out);
  CHECK(csv.header == "target,intensity,share");
  REQUIRE(csv.rows.size() == 18);
  double share_sum = 0.0;
  for (const auto& row : csv.rows) {
    CHECK(row[1] > 0.0);
    share_sum += row[2];
  }
  CHECK(share_sum == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(std::stod(csv.meta.at("fidelity")) > 0.5);
  CHECK(std::stod(csv.meta.at("gamma_mean")) > 0.1);
  CHECK(csv.meta.count("gamma_port_1") == 1);
  CHECK(csv.meta.count("gamma_port_2") == 1);
}
