#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

#include <doctest.h>
#include <json.hpp>

#include "lqn/result.hpp"

using lqn::ExperimentResult;

namespace {

ExperimentResult sample_result() {
  ExperimentResult r;
  r.add_meta("tool_version", lqn::kToolVersion);
  r.add_meta("experiment", "demo");
  r.add_meta("seed", static_cast<long long>(12));
  r.columns = {"a", "b"};
  r.rows = {{1.0, 0.5}, {2.0, 0.1 + 0.2}};
  return r;
}

}  // namespace

TEST_CASE("format_double round-trips and spells out non-finite values") {
  CHECK(lqn::format_double(0.5) == "0.5");
  CHECK(lqn::format_double(-3.0) == "-3");
  CHECK(std::stod(lqn::format_double(0.1 + 0.2)) == 0.1 + 0.2);
  CHECK(lqn::format_double(std::numeric_limits<double>::quiet_NaN()) == "nan");
  CHECK(lqn::format_double(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(lqn::format_double(-std::numeric_limits<double>::infinity()) == "-inf");
}

TEST_CASE("to_csv layout: metadata comments, header, rows") {
  const std::string csv = lqn::to_csv(sample_result());
  CHECK(csv.find("# tool_version=") == 0);
  CHECK(csv.find("# experiment=demo\n") != std::string::npos);
  CHECK(csv.find("# seed=12\n") != std::string::npos);
  CHECK(csv.find("a,b\n") != std::string::npos);
  CHECK(csv.find("1,0.5\n") != std::string::npos);
  // Identical runs produce identical bytes.
  CHECK(csv == lqn::to_csv(sample_result()));
}

TEST_CASE("to_json mirrors columns and preserves values") {
  const std::string text = lqn::to_json(sample_result());
  const nlohmann::json j = nlohmann::json::parse(text);
  CHECK(j["metadata"]["experiment"] == "demo");
  CHECK(j["rows"].size() == 2);
  CHECK(j["rows"][0]["a"] == 1.0);
  CHECK(j["rows"][1]["b"] == 0.1 + 0.2);
  CHECK(text == lqn::to_json(sample_result()));
}

TEST_CASE("non-finite cells serialize as strings in JSON") {
  ExperimentResult r;
  r.columns = {"v"};
  r.rows = {{std::numeric_limits<double>::quiet_NaN()}};
  const nlohmann::json j = nlohmann::json::parse(lqn::to_json(r));
  CHECK(j["rows"][0]["v"] == "nan");
}

TEST_CASE("text file round-trip and error on bad path") {
  const std::string path = "result_roundtrip_tmp.txt";
  lqn::write_text_file(path, "hello\nworld\n");
  CHECK(lqn::read_text_file(path) == "hello\nworld\n");
  std::remove(path.c_str());
  CHECK_THROWS_AS(lqn::read_text_file("definitely/not/a/real/path.txt"),
                  std::runtime_error);
  CHECK_THROWS_AS(lqn::write_text_file("definitely/not/a/real/path.txt", "x"),
                  std::runtime_error);
}
